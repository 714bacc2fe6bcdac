"""Attack models and the entangle-measure discrimination check.

Three active attacks are supported:

* intercept-resend on chosen ring edges, with Eve measuring per-qubit in
  MB_X, MB_Z or a uniformly random choice of the two;
* a user impersonator who encodes identity with a forged tag;
* a third party (or someone posing as one) encoding with a forged
  aggregate tag.

Classical publications stay honest in every scenario; only the quantum
encoding is affected.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from mqka import qstate
from mqka.bits import from_str, random_bits, to_str, xor_all
from mqka.errors import ConfigError
from mqka.protocol import SessionState, TravellingSequence, ring_edges
from mqka.qstate import TwoQubitState


class AttackKind(enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"
    IMPERSONATE_USER = "impersonate_user"
    FORGED_TP_TAG = "forged_tp_tag"


class BasisPolicy(enum.Enum):
    RANDOM_XZ = "random_xz"
    ALWAYS_X = "always_x"
    ALWAYS_Z = "always_z"


class TargetSet(enum.Enum):
    """Which in-flight states Eve touches, judged by the simulator's full view."""

    ANY = "any"
    EVEN = "even"
    ODD = "odd"


class FakeTagMode(enum.Enum):
    RANDOM = "random"
    ALL_ZERO = "all_zero"
    CHOSEN = "chosen"
    FLIP = "flip"


@dataclass
class AttackScenario:
    """Adversary descriptor.

    ``edges``/``sequences`` of ``None`` mean every ring edge / every
    initiator's sequence. ``flip_positions`` of ``None`` with FLIP mode
    complements the whole true tag.
    """

    kind: AttackKind = AttackKind.NONE
    edges: tuple[tuple[int, int], ...] | None = None
    sequences: tuple[int, ...] | None = None
    basis_policy: BasisPolicy = BasisPolicy.RANDOM_XZ
    target_set: TargetSet = TargetSet.ANY
    target: int | None = None
    fake_tag_mode: FakeTagMode = FakeTagMode.RANDOM
    fake_tag: str | None = None
    flip_positions: tuple[int, ...] | None = None

    def validate(self, N: int, M: int, n: int) -> None:
        if self.edges is not None:
            valid = set(ring_edges(N, M))
            for e in self.edges:
                if tuple(e) not in valid:
                    raise ConfigError(f"[adversary] edge {e[0]}-{e[1]} is not a ring edge")
        if self.sequences is not None:
            for i in self.sequences:
                if not 1 <= i <= N:
                    raise ConfigError(f"[adversary] sequence {i} has no initiator")
        if self.kind is AttackKind.IMPERSONATE_USER:
            if self.target is None or not 1 <= self.target <= N:
                raise ConfigError(f"[adversary] target must be in 1..{N}")
        if self.kind in (AttackKind.IMPERSONATE_USER, AttackKind.FORGED_TP_TAG):
            if self.fake_tag_mode is FakeTagMode.CHOSEN:
                if self.fake_tag is None or len(from_str(self.fake_tag)) != n:
                    raise ConfigError(f"[adversary] fake_tag must have n={n} bits")
            if self.flip_positions is not None:
                for t in self.flip_positions:
                    if not 0 <= t < n:
                        raise ConfigError(f"[adversary] flip position {t} outside 0..{n - 1}")


# ---------------------------------------------------------------- intercept-resend


def intercept_resend_hook(
    state: TwoQubitState,
    policy: BasisPolicy,
    rng: np.random.Generator,
    log: list | None = None,
) -> TwoQubitState:
    """Measure both qubits and resend the collapsed product state.

    RANDOM_XZ consumes one extra draw for the basis choice. If ``log`` is
    given, ``(basis, outcome)`` is appended to it.
    """
    if policy is BasisPolicy.ALWAYS_X:
        basis = "X"
    elif policy is BasisPolicy.ALWAYS_Z:
        basis = "Z"
    else:
        basis = "X" if rng.random() < 0.5 else "Z"
    if basis == "X":
        w = qstate.measure_x(state, rng)
        out = qstate.make_hadamard_state(*w)
    else:
        w = qstate.measure_z(state, rng)
        out = qstate.make_basis_state(*w)
    if log is not None:
        log.append((basis, (w.first, w.second)))
    return out


def state_set(state: TwoQubitState) -> str:
    """``even`` for Hadamard-product states, ``odd`` for the one-flip family."""
    return "even" if qstate.hadamard_label(state) is not None else "odd"


@dataclass
class EveRecord:
    initiator: int
    t: int
    edge: tuple[int, int]
    state_set: str
    basis: str
    outcome: tuple[int, int]


class InterceptResend:
    """Hop hook running intercept-resend on the configured edges."""

    def __init__(self, scenario: AttackScenario, rng: np.random.Generator):
        self.scenario = scenario
        self.rng = rng
        self.records: list[EveRecord] = []

    def __call__(self, edge: tuple[int, int], seq: TravellingSequence) -> None:
        sc = self.scenario
        if sc.edges is not None and edge not in sc.edges:
            return
        if sc.sequences is not None and seq.initiator not in sc.sequences:
            return
        for t, s in enumerate(seq.states):
            kind = state_set(s)
            if sc.target_set is not TargetSet.ANY and kind != sc.target_set.value:
                continue
            log: list = []
            seq.states[t] = intercept_resend_hook(s, sc.basis_policy, self.rng, log)
            basis, outcome = log[0]
            self.records.append(EveRecord(seq.initiator, t, edge, kind, basis, outcome))

    def summarize(self, session: SessionState) -> dict:
        """Block-level damage and Eve's guess rate, against the honest key."""
        true_key = xor_all([p.S for p in session.parties.values()])
        first: dict[tuple[int, int], EveRecord] = {}
        for rec in self.records:
            first.setdefault((rec.initiator, rec.t), rec)
        by_set = {"even": [0, 0], "odd": [0, 0]}
        by_basis = {"X": [0, 0], "Z": [0, 0]}
        errors = guesses = 0
        for (i, t), rec in first.items():
            K = session.parties[i].K
            wrong = bool(np.any(K[2 * t:2 * t + 2] != true_key[2 * t:2 * t + 2]))
            errors += wrong
            by_set[rec.state_set][0] += 1
            by_set[rec.state_set][1] += wrong
            by_basis[rec.basis][0] += 1
            by_basis[rec.basis][1] += wrong
            guesses += tuple(int(b) for b in true_key[2 * t:2 * t + 2]) == rec.outcome
        attacked = len(first)
        return {
            "kind": AttackKind.INTERCEPT_RESEND.value,
            "measurements": len(self.records),
            "attacked_blocks": attacked,
            "block_errors": errors,
            "block_error_rate": errors / attacked if attacked else 0.0,
            "by_set": {k: {"attacked": a, "errors": e} for k, (a, e) in by_set.items()},
            "by_basis": {k: {"attacked": a, "errors": e} for k, (a, e) in by_basis.items()},
            "eve_block_guess_rate": guesses / attacked if attacked else 0.0,
        }


# ---------------------------------------------------------------- forged tags


def forge_tag(
    true_tag: np.ndarray,
    mode: FakeTagMode,
    rng: np.random.Generator,
    chosen: str | None = None,
    flip_positions=None,
) -> np.ndarray:
    if mode is FakeTagMode.RANDOM:
        return random_bits(rng, len(true_tag))
    if mode is FakeTagMode.ALL_ZERO:
        return np.zeros(len(true_tag), dtype=np.uint8)
    if mode is FakeTagMode.CHOSEN:
        if chosen is None:
            raise ConfigError("CHOSEN fake tag needs explicit bits")
        return from_str(chosen)
    forged = np.array(true_tag, dtype=np.uint8)
    idx = slice(None) if flip_positions is None else list(flip_positions)
    forged[idx] ^= 1
    return forged


def _forgery_outcome(kind: AttackKind, true_tag, forged, extra: dict) -> dict:
    mismatch = np.nonzero(np.asarray(true_tag) != forged)[0]
    return {
        "kind": kind.value,
        **extra,
        "forged_tag": to_str(forged),
        "forged_positions": [int(t) for t in mismatch],
        "forged_count": int(len(mismatch)),
    }


def impersonation_scenario(
    session: SessionState,
    target: int,
    fake_tag_mode: FakeTagMode,
    rng: np.random.Generator,
    chosen: str | None = None,
    flip_positions=None,
) -> SessionState:
    """Replace the target's identity-encoding tag with a forgery.

    The third party keeps encoding with the aggregate of the true tags.
    """
    if target not in session.parties:
        raise ConfigError(f"impersonation target {target} is not a participant")
    party = session.parties[target]
    party.encoding_tag = forge_tag(party.h, fake_tag_mode, rng, chosen, flip_positions)
    return session


def forged_tp_tag_scenario(
    session: SessionState,
    fake_tag_mode: FakeTagMode,
    rng: np.random.Generator,
    chosen: str | None = None,
    flip_positions=None,
) -> SessionState:
    session.tp_encoding_tag = forge_tag(session.h0, fake_tag_mode, rng, chosen, flip_positions)
    return session


@dataclass
class Attack:
    """Wiring of one scenario into a session: hop hooks plus a summary callback."""

    scenario: AttackScenario
    hooks: list = field(default_factory=list)
    _summary: dict = field(default_factory=dict)
    _interceptor: InterceptResend | None = None

    def summarize(self, session: SessionState) -> dict:
        if self._interceptor is not None:
            return self._interceptor.summarize(session)
        return dict(self._summary)


def prepare_attack(
    session: SessionState, scenario: AttackScenario | None, rng: np.random.Generator
) -> Attack:
    """Apply tag forgeries to ``session`` and build hooks; draws only from ``rng``."""
    scenario = scenario or AttackScenario()
    cfg = session.config
    scenario.validate(cfg.N, cfg.M, cfg.n)
    attack = Attack(scenario)
    if scenario.kind is AttackKind.NONE:
        attack._summary = {"kind": AttackKind.NONE.value}
    elif scenario.kind is AttackKind.INTERCEPT_RESEND:
        attack._interceptor = InterceptResend(scenario, rng)
        attack.hooks.append(attack._interceptor)
    elif scenario.kind is AttackKind.IMPERSONATE_USER:
        impersonation_scenario(
            session, scenario.target, scenario.fake_tag_mode, rng,
            scenario.fake_tag, scenario.flip_positions,
        )
        party = session.parties[scenario.target]
        attack._summary = _forgery_outcome(
            scenario.kind, party.h, party.encoding_tag, {"target": scenario.target}
        )
    else:
        forged_tp_tag_scenario(
            session, scenario.fake_tag_mode, rng, scenario.fake_tag, scenario.flip_positions
        )
        attack._summary = _forgery_outcome(scenario.kind, session.h0, session.tp_encoding_tag, {})
    return attack


# ---------------------------------------------------------------- entangle-measure

# Sign of the |ab>|e_ab> component (ab = 00, 01, 10, 11) in alpha_0..alpha_7.
# Rows 0-3: odd number of encodings; rows 4-7: even number.
COMPOSITE_SIGNS = np.array(
    [
        [1, -1, -1, -1],
        [1, -1, 1, 1],
        [1, 1, -1, 1],
        [1, 1, 1, -1],
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=float,
)

# alpha_7 = alpha_a + alpha_b - alpha_3 for each (a, b)
LINEAR_RELATIONS = ((0, 4), (1, 5), (2, 6))


@dataclass
class AncillaFamily:
    ancillas: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    alphas: np.ndarray  # shape (8, 4d)

    @property
    def dim(self) -> int:
        return len(self.ancillas[0])


@dataclass
class UsdCheck:
    feasible: bool
    rank: int
    residuals: tuple[float, float, float]
    singular_values: np.ndarray


def build_entangled_family(e00, e01, e10, e11) -> AncillaFamily:
    """Composite states ``1/2 sum_ab sign_ab |ab>|e_ab>`` for all eight sign rows."""
    anc = tuple(np.atleast_1d(np.asarray(e, dtype=np.complex128)) for e in (e00, e01, e10, e11))
    dims = {len(e) for e in anc}
    if len(dims) != 1:
        raise ConfigError(f"ancilla dimension mismatch: {sorted(dims)}")
    if all(not np.any(e) for e in anc):
        raise ConfigError("ancilla vectors are all zero")
    d = dims.pop()
    alphas = np.zeros((8, 4 * d), dtype=np.complex128)
    for row, signs in enumerate(COMPOSITE_SIGNS):
        for ab in range(4):
            alphas[row, ab * d:(ab + 1) * d] = signs[ab] * anc[ab] / 2
    return AncillaFamily(ancillas=anc, alphas=alphas)


def random_ancilla_family(d: int, rng: np.random.Generator) -> AncillaFamily:
    """Four independent Haar-random unit vectors in ``C^d``."""
    if d < 1:
        raise ConfigError("ancilla dimension must be >= 1")
    vecs = rng.normal(size=(4, d)) + 1j * rng.normal(size=(4, d))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return build_entangled_family(*vecs)


def check_usd_feasible(family: AncillaFamily, tol: float = 1e-10) -> UsdCheck:
    """Numerical rank of the eight composites; USD needs all eight independent.

    A singular value counts toward the rank when it exceeds
    ``tol * max(1, largest singular value)``.
    """
    a = family.alphas
    sv = np.linalg.svd(a, compute_uv=False)
    cutoff = tol * max(1.0, float(sv[0]) if len(sv) else 0.0)
    rank = int(np.sum(sv > cutoff))
    residuals = tuple(
        float(np.linalg.norm(a[7] - (a[i] + a[j] - a[3]))) for i, j in LINEAR_RELATIONS
    )
    return UsdCheck(feasible=rank == 8, rank=rank, residuals=residuals, singular_values=sv)
