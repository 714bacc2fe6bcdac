"""Exact two-qubit statevector algebra for the Grover-style encoding.

A state carries four complex amplitudes indexed by the basis label ``ab``
(``a`` is the first tensor factor), stored at position ``2*a + b``.

The Hadamard-product family follows the cross convention

    phi~_xy = 1/2 (|0> + (-1)^y |1>) (|0> + (-1)^x |1>)

so the FIRST factor carries ``(-1)^y`` and the SECOND carries ``(-1)^x``.
Both measurement decoders report outcomes in subscript order, i.e. a
collapse onto ``phi~_xy`` returns ``BitPair(x, y)`` and a collapse onto
``|mn>`` returns ``BitPair(m, n)``.

Operators are applied functionally; global phase is never normalized
away, so comparisons should go through :func:`equal_up_to_phase`.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

ATOL = 1e-12

_ALPHABET = (0.0, 0.5, 1.0)


class BitPair(NamedTuple):
    first: int
    second: int


class TwoQubitState:
    """Immutable four-amplitude statevector."""

    __slots__ = ("amp",)

    def __init__(self, amp):
        a = np.array(amp, dtype=np.complex128).reshape(4)
        a.flags.writeable = False
        self.amp = a

    @classmethod
    def _wrap(cls, a: np.ndarray) -> "TwoQubitState":
        # caller hands over a fresh array
        obj = cls.__new__(cls)
        a.flags.writeable = False
        obj.amp = a
        return obj

    def __repr__(self) -> str:
        parts = ", ".join(f"{complex(z):.4g}" for z in self.amp)
        return f"TwoQubitState([{parts}])"

    def __eq__(self, other) -> bool:
        if not isinstance(other, TwoQubitState):
            return NotImplemented
        return bool(np.array_equal(self.amp, other.amp))

    __hash__ = None

    def __neg__(self) -> "TwoQubitState":
        return TwoQubitState._wrap(-self.amp)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))


def make_basis_state(m: int, n: int) -> TwoQubitState:
    """Computational basis state ``|mn>``."""
    a = np.zeros(4, dtype=np.complex128)
    a[2 * m + n] = 1.0
    return TwoQubitState._wrap(a)


def make_hadamard_state(x: int, y: int) -> TwoQubitState:
    """``phi~_xy`` with ``amp[ab] = (-1)^(y*a + x*b) / 2``."""
    a = np.array(
        [(-1) ** (y * a_ + x * b_) / 2 for a_ in (0, 1) for b_ in (0, 1)],
        dtype=np.complex128,
    )
    return TwoQubitState._wrap(a)


# rows indexed by 2*x + y; real, so <phi~_xy|s> = row @ amp
_PHI = np.array(
    [make_hadamard_state(x, y).amp.real for x in (0, 1) for y in (0, 1)]
)


def apply_u(s: TwoQubitState, m: int, n: int) -> TwoQubitState:
    """Phase reversal ``U_mn = I - 2|mn><mn|``: negates the ``mn`` amplitude."""
    a = s.amp.copy()
    a[2 * m + n] = -a[2 * m + n]
    return TwoQubitState._wrap(a)


def apply_v(s: TwoQubitState, x: int, y: int) -> TwoQubitState:
    """Amplitude amplification ``V_xy = 2|phi~_xy><phi~_xy| - I``."""
    phi = _PHI[2 * x + y]
    overlap = phi @ s.amp
    return TwoQubitState._wrap(2 * overlap * phi - s.amp)


def z_probabilities(s: TwoQubitState) -> np.ndarray:
    """Outcome probabilities of a per-qubit MB_Z measurement, indexed ``2*m + n``."""
    return np.abs(s.amp) ** 2


def x_probabilities(s: TwoQubitState) -> np.ndarray:
    """Outcome probabilities of a per-qubit MB_X measurement, indexed ``2*x + y``."""
    return np.abs(_PHI @ s.amp) ** 2


def _sample(probs: np.ndarray, rng: np.random.Generator) -> BitPair:
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf / cdf[-1], rng.random(), side="right"))
    idx = min(idx, 3)
    return BitPair(idx >> 1, idx & 1)


def measure_z(s: TwoQubitState, rng: np.random.Generator) -> BitPair:
    """Measure both qubits in MB_Z; returns ``(m, n)`` for a collapse onto ``|mn>``.

    Exactly one uniform draw is consumed per call.
    """
    return _sample(z_probabilities(s), rng)


def measure_x(s: TwoQubitState, rng: np.random.Generator) -> BitPair:
    """Measure both qubits in MB_X; returns ``(x, y)`` for a collapse onto ``phi~_xy``.

    Exactly one uniform draw is consumed per call.
    """
    return _sample(x_probabilities(s), rng)


def equal_up_to_phase(s1: TwoQubitState, s2: TwoQubitState, tol: float = ATOL) -> bool:
    return bool(abs(np.vdot(s1.amp, s2.amp)) >= 1 - tol)


def hadamard_label(s: TwoQubitState, tol: float = ATOL) -> BitPair | None:
    """``(x, y)`` if ``s`` equals some ``phi~_xy`` up to phase, else ``None``."""
    probs = x_probabilities(s)
    idx = int(np.argmax(probs))
    if probs[idx] >= 1 - tol:
        return BitPair(idx >> 1, idx & 1)
    return None


def basis_label(s: TwoQubitState, tol: float = ATOL) -> BitPair | None:
    probs = z_probabilities(s)
    idx = int(np.argmax(probs))
    if probs[idx] >= 1 - tol:
        return BitPair(idx >> 1, idx & 1)
    return None


def describe_state(s: TwoQubitState) -> str:
    """Short human label, used in traces.

    States with an odd number of negative signs (one U applied to a
    ``phi~`` state) are labelled canonically as ``U_mn phi~_00``.
    """
    lab = hadamard_label(s)
    if lab is not None:
        return f"phi~{lab.first}{lab.second}"
    lab = basis_label(s)
    if lab is not None:
        return f"|{lab.first}{lab.second}>"
    for m in (0, 1):
        for n in (0, 1):
            if equal_up_to_phase(s, apply_u(make_hadamard_state(0, 0), m, n)):
                return f"U{m}{n} phi~00"
    return repr(s)


def in_protocol_alphabet(s: TwoQubitState, tol: float = ATOL) -> bool:
    """True iff every amplitude is in {0, +-1/2, +-1} after removing a global phase."""
    a = s.amp
    lead = a[np.argmax(np.abs(a) > tol)]
    if abs(lead) <= tol:
        return False
    r = a * (abs(lead) / lead)
    if np.max(np.abs(r.imag)) > tol:
        return False
    mags = np.abs(r.real)
    return all(min(abs(v - c) for c in _ALPHABET) <= tol for v in mags)
