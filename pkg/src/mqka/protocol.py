"""Protocol state machine for the authenticated ring key agreement.

Node ``0`` is the third party, nodes ``1..N`` are the participants and
nodes ``N+1..M`` are pass-through nodes whose switches stay closed. The
physical ring visits ``1, 2, ..., M, 0`` and wraps back to ``1``; every
travelling sequence makes one full loop starting and ending at its
initiator.

Phases advance READY -> RETURNED -> PUBLISHED -> EXTRACTED -> DETECTED.
All randomness comes from the ``rng`` handed to each step, in a fixed
order, so a session is a pure function of (config, seed).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from mqka import qstate
from mqka.auth import (
    DEFAULT_KEY_BYTES,
    DEFAULT_MAC,
    IdentityOp,
    aggregate_tags,
    derive_tag,
    generate_master_key,
    mac_digest,
    select_identity_op,
)
from mqka.bits import from_str, random_bits, xor_all
from mqka.errors import ChannelLoss, ConfigError, ProtocolOrderError, TransportError
from mqka.qstate import TwoQubitState

TP = 0

EXPLICIT_FIELDS = ("ID", "r", "S", "L", "B")


class Phase(enum.Enum):
    READY = "ready"
    RETURNED = "returned"
    PUBLISHED = "published"
    EXTRACTED = "extracted"
    DETECTED = "detected"


@dataclass
class SessionConfig:
    """Parameters of one protocol execution.

    ``tags`` switches tag derivation to injection: a mapping from party
    index to a literal tag string. ``inputs`` optionally pins any of
    ``ID``, ``r``, ``S``, ``L``, ``B`` (each a ``{party: bits}`` mapping)
    and ``r0``; anything not pinned is drawn from the session rng.
    """

    N: int
    M: int
    n: int
    l: int = 6
    r_len: int = 4
    delta: float = 0.0
    threshold: float = 0.0
    seed: int = 0
    mac: str = DEFAULT_MAC
    key_bytes: int = DEFAULT_KEY_BYTES
    tags: dict[int, str] | None = None
    inputs: dict[str, Any] | None = None
    adversary: Any = None

    @property
    def tag_mode(self) -> str:
        return "derived" if self.tags is None else "injected"

    @property
    def samples_per_user(self) -> int:
        # guard against 0.3*10/3 style representation error just below an integer
        return math.floor(self.delta * self.n / self.N + 1e-9)

    def validate(self) -> None:
        if not 2 <= self.N <= self.M:
            raise ConfigError(f"need 2 <= N <= M, got N={self.N}, M={self.M}")
        if self.n < 1:
            raise ConfigError(f"need n >= 1, got n={self.n}")
        if self.l < 1 or self.r_len < 1 or self.key_bytes < 1:
            raise ConfigError("l, r_len and key_bytes must be >= 1")
        if not 0 <= self.delta < 1:
            raise ConfigError(f"need 0 <= delta < 1, got delta={self.delta}")
        if not 0 <= self.threshold < 1:
            raise ConfigError(f"need 0 <= threshold < 1, got threshold={self.threshold}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.samples_per_user * self.N > 2 * self.n:
            raise ConfigError(
                f"sample overflow: floor(delta*n/N)*N = {self.samples_per_user * self.N}"
                f" exceeds key length 2n = {2 * self.n}"
            )
        mac_digest(self.mac)
        parties = set(range(1, self.N + 1))
        if self.tags is not None:
            if set(self.tags) != parties:
                raise ConfigError(f"injected tags must cover parties {sorted(parties)}")
            for i, t in self.tags.items():
                if len(from_str(t)) != self.n:
                    raise ConfigError(f"injected tag h_{i} must have n={self.n} bits")
        lengths = {"ID": self.l, "r": self.r_len, "S": 2 * self.n, "L": 2 * self.n, "B": 2 * self.n}
        for name, values in (self.inputs or {}).items():
            if name == "r0":
                if len(from_str(values)) != self.r_len:
                    raise ConfigError(f"r_0 must have r_len={self.r_len} bits")
                continue
            if name not in lengths:
                raise ConfigError(f"unknown explicit input {name!r}")
            for i, bits in values.items():
                if i not in parties:
                    raise ConfigError(f"explicit {name}_{i}: no such participant")
                if len(from_str(bits)) != lengths[name]:
                    raise ConfigError(f"explicit {name}_{i} must have {lengths[name]} bits")


@dataclass
class PartyRecord:
    """One participant's secrets and pads.

    ``h`` is the true tag; ``encoding_tag`` is what actually drives the
    identity selectors (they differ only under impersonation).
    """

    index: int
    ID: np.ndarray
    master_key: bytes
    r: np.ndarray
    S: np.ndarray
    L: np.ndarray
    B: np.ndarray
    h: np.ndarray
    encoding_tag: np.ndarray
    K: np.ndarray | None = None


class HopEntry(NamedTuple):
    holder: int
    t: int | None
    action: str
    ops: tuple[tuple[int, int], ...]


@dataclass
class TravellingSequence:
    initiator: int
    states: list[TwoQubitState]
    hop_log: list[HopEntry] = field(default_factory=list)
    holder: int = -1

    def __post_init__(self):
        if self.holder < 0:
            self.holder = self.initiator


@dataclass
class ExtractionRecord:
    bases: list[str]
    outcomes: list[tuple[int, int]]
    deterministic: list[bool]


@dataclass
class DetectionReport:
    samples: dict[int, list[int]]
    disclosed: list[dict]
    comparisons: int
    disagreements: int
    error_rate: float
    block_comparisons: int
    block_disagreements: int
    block_error_rate: float
    aborted: bool
    remaining_positions: list[int]
    session_keys: dict[int, np.ndarray]


@dataclass
class SessionState:
    config: SessionConfig
    r0: np.ndarray
    parties: dict[int, PartyRecord]
    tp_keystore: dict[int, bytes]
    h0: np.ndarray
    tp_encoding_tag: np.ndarray
    sequences: dict[int, TravellingSequence]
    phase: Phase = Phase.READY
    publication_order: list[int] | None = None
    C: np.ndarray | None = None
    extraction: dict[int, ExtractionRecord] = field(default_factory=dict)
    detection: DetectionReport | None = None


def ring_route(N: int, M: int, start: int) -> list[int]:
    """Nodes visited after ``start`` on one full loop, ending back at ``start``."""
    order = list(range(1, M + 1)) + [TP]
    k = order.index(start)
    return order[k + 1:] + order[: k + 1]


def ring_edges(N: int, M: int) -> list[tuple[int, int]]:
    order = list(range(1, M + 1)) + [TP]
    return [(a, order[(k + 1) % len(order)]) for k, a in enumerate(order)]


def node_role(node: int, N: int) -> str:
    if node == TP:
        return "third_party"
    if node <= N:
        return "user"
    return "pass_through"


def init_session(cfg: SessionConfig, rng: np.random.Generator) -> SessionState:
    """Draw pads, inputs and tags, and prepare the N travelling sequences.

    Random values are always drawn (then overridden by explicit inputs),
    so pinning one field does not shift the stream for the others.
    """
    cfg.validate()
    N, n = cfg.N, cfg.n
    explicit = cfg.inputs or {}
    r0 = random_bits(rng, cfg.r_len)
    if "r0" in explicit:
        r0 = from_str(explicit["r0"])
    parties: dict[int, PartyRecord] = {}
    for i in range(1, N + 1):
        drawn = {
            "ID": random_bits(rng, cfg.l),
            "key": generate_master_key(rng, cfg.key_bytes),
            "r": random_bits(rng, cfg.r_len),
            "S": random_bits(rng, 2 * n),
            "L": random_bits(rng, 2 * n),
            "B": random_bits(rng, 2 * n),
        }
        for name in EXPLICIT_FIELDS:
            if i in explicit.get(name, {}):
                drawn[name] = from_str(explicit[name][i])
        if cfg.tags is None:
            h = derive_tag(drawn["key"], drawn["ID"], drawn["r"], r0, n, cfg.mac)
        else:
            h = from_str(cfg.tags[i])
        parties[i] = PartyRecord(
            index=i,
            ID=drawn["ID"],
            master_key=drawn["key"],
            r=drawn["r"],
            S=drawn["S"],
            L=drawn["L"],
            B=drawn["B"],
            h=h,
            encoding_tag=h.copy(),
        )
    h0 = aggregate_tags([p.h for p in parties.values()])
    sequences = {
        i: TravellingSequence(
            initiator=i,
            states=[
                qstate.make_hadamard_state(int(p.L[2 * t]), int(p.L[2 * t + 1]))
                for t in range(n)
            ],
        )
        for i, p in parties.items()
    }
    return SessionState(
        config=cfg,
        r0=r0,
        parties=parties,
        tp_keystore={i: p.master_key for i, p in parties.items()},
        h0=h0,
        tp_encoding_tag=h0.copy(),
        sequences=sequences,
    )


def encode_identity(
    seq: TravellingSequence, t: int, choice: IdentityOp, holder: int | None = None
) -> None:
    if not 0 <= t < len(seq.states):
        raise IndexError(t)
    s = seq.states[t]
    for m, n in choice.ops:
        s = qstate.apply_u(s, m, n)
    seq.states[t] = s
    seq.hop_log.append(HopEntry(seq.holder if holder is None else holder, t, "identity", choice.ops))


def encode_private(
    seq: TravellingSequence, t: int, s_odd: int, s_even: int, holder: int | None = None
) -> None:
    if not 0 <= t < len(seq.states):
        raise IndexError(t)
    seq.states[t] = qstate.apply_u(seq.states[t], s_odd, s_even)
    seq.hop_log.append(
        HopEntry(seq.holder if holder is None else holder, t, "private", ((s_odd, s_even),))
    )


HopHook = Callable[[tuple[int, int], TravellingSequence], None]


def _encode_identity_row(seq: TravellingSequence, tag, B, holder: int) -> None:
    for t, (h, b) in enumerate(zip(tag.tolist(), B[0::2].tolist())):
        encode_identity(seq, t, select_identity_op(h, b), holder)


def run_ring_pass(session: SessionState, hooks: Sequence[HopHook] = ()) -> SessionState:
    """Send every sequence once around the ring.

    Sequences are processed in initiator order and hops in ring order;
    hooks run on every inter-node edge before the receiving node acts.
    A hook raising :class:`ChannelLoss` aborts the run.
    """
    if session.phase is not Phase.READY:
        raise ProtocolOrderError(f"ring pass needs phase READY, not {session.phase.value}")
    cfg = session.config
    for i, seq in session.sequences.items():
        initiator = session.parties[i]
        _encode_identity_row(seq, initiator.encoding_tag, initiator.B, i)
        prev = i
        for node in ring_route(cfg.N, cfg.M, i):
            edge = (prev, node)
            for hook in hooks:
                try:
                    hook(edge, seq)
                except ChannelLoss as exc:
                    raise TransportError(f"sequence {i} lost on edge {edge}: {exc}") from exc
            seq.holder = node
            seq.hop_log.append(HopEntry(node, None, f"recv {prev}->{node}", ()))
            if node == i:
                break
            role = node_role(node, cfg.N)
            if role == "user":
                p = session.parties[node]
                S = p.S.tolist()
                for t in range(cfg.n):
                    encode_private(seq, t, S[2 * t], S[2 * t + 1], node)
                _encode_identity_row(seq, p.encoding_tag, p.B, node)
            elif role == "third_party":
                for t in range(cfg.n):
                    op = (
                        IdentityOp.SINGLE_U00
                        if session.tp_encoding_tag[t] == 0
                        else IdentityOp.DOUBLE_U01_U10
                    )
                    encode_identity(seq, t, op, TP)
            prev = node
    session.phase = Phase.RETURNED
    return session


def publish_bases(session: SessionState, rng: np.random.Generator) -> None:
    """All users publish B_i (whole strings, in a random party order)."""
    if session.phase is not Phase.RETURNED:
        raise ProtocolOrderError(f"publication needs phase RETURNED, not {session.phase.value}")
    N = session.config.N
    session.publication_order = [int(k) + 1 for k in rng.permutation(N)]
    session.C = xor_all([p.B[0::2] for p in session.parties.values()])
    session.phase = Phase.PUBLISHED


def extract_key(session: SessionState, i: int, rng: np.random.Generator) -> np.ndarray:
    """Measure party ``i``'s returned sequence and derive ``K_i``."""
    if session.phase not in (Phase.PUBLISHED, Phase.EXTRACTED) or session.C is None:
        raise ProtocolOrderError("key extraction needs all B_i published first")
    p = session.parties[i]
    seq = session.sequences[i]
    n = session.config.n
    K = np.zeros(2 * n, dtype=np.uint8)
    rec = ExtractionRecord(bases=[], outcomes=[], deterministic=[])
    for t in range(n):
        l1, l2 = int(p.L[2 * t]), int(p.L[2 * t + 1])
        s = seq.states[t]
        if session.C[t] == 0:
            probs = qstate.x_probabilities(s)
            w = qstate.measure_x(s, rng)
            off = (l1, l2)
            rec.bases.append("X")
        else:
            s = qstate.apply_v(s, l1, l2)
            probs = qstate.z_probabilities(s)
            w = qstate.measure_z(s, rng)
            off = (1, 1)
            rec.bases.append("VZ")
        rec.outcomes.append((w.first, w.second))
        rec.deterministic.append(bool(probs.max() >= 1 - qstate.ATOL))
        K[2 * t] = p.S[2 * t] ^ w.first ^ off[0]
        K[2 * t + 1] = p.S[2 * t + 1] ^ w.second ^ off[1]
    p.K = K
    session.extraction[i] = rec
    session.phase = Phase.EXTRACTED if len(session.extraction) == len(session.parties) else Phase.PUBLISHED
    return K


def detect_eavesdropping(session: SessionState, rng: np.random.Generator) -> DetectionReport:
    """Disjoint per-user sampling of key bits and pairwise comparison.

    Each user, in index order, claims ``floor(delta*n/N)`` unclaimed bit
    positions uniformly without replacement; every other user discloses
    its bit there. Positions are 0-based into the 2n-bit key.
    """
    if session.phase is not Phase.EXTRACTED:
        raise ProtocolOrderError("detection needs every K_i extracted first")
    cfg = session.config
    k = cfg.samples_per_user
    pool = np.arange(2 * cfg.n)
    samples: dict[int, list[int]] = {}
    for i in session.parties:
        if k:
            chosen = np.sort(rng.choice(pool, size=k, replace=False))
            pool = np.setdiff1d(pool, chosen)
        else:
            chosen = np.array([], dtype=int)
        samples[i] = [int(x) for x in chosen]

    keys = {i: p.K for i, p in session.parties.items()}
    disclosed = []
    comparisons = disagreements = 0
    block_comparisons = block_disagreements = 0
    for i, positions in samples.items():
        for pos in positions:
            disclosed.append(
                {"position": pos, "claimant": i, "bits": {str(j): int(keys[j][pos]) for j in keys}}
            )
            for j in keys:
                if j != i:
                    comparisons += 1
                    disagreements += int(keys[j][pos] != keys[i][pos])
        blocks: dict[int, list[int]] = {}
        for pos in positions:
            blocks.setdefault(pos // 2, []).append(pos)
        for block_positions in blocks.values():
            for j in keys:
                if j != i:
                    block_comparisons += 1
                    block_disagreements += int(
                        any(keys[j][q] != keys[i][q] for q in block_positions)
                    )
    error_rate = disagreements / comparisons if comparisons else 0.0
    block_error_rate = block_disagreements / block_comparisons if block_comparisons else 0.0
    remaining = [int(x) for x in pool]
    report = DetectionReport(
        samples=samples,
        disclosed=disclosed,
        comparisons=comparisons,
        disagreements=disagreements,
        error_rate=error_rate,
        block_comparisons=block_comparisons,
        block_disagreements=block_disagreements,
        block_error_rate=block_error_rate,
        aborted=error_rate > cfg.threshold,
        remaining_positions=remaining,
        session_keys={i: keys[i][remaining] for i in keys},
    )
    session.detection = report
    session.phase = Phase.DETECTED
    return report


def particle_efficiency(N: int, delta: float) -> float:
    """Qubit efficiency ``(2 - delta) / (3N)``."""
    if N < 2:
        raise ConfigError("efficiency needs N >= 2")
    if not 0 <= delta < 1:
        raise ConfigError("efficiency needs 0 <= delta < 1")
    return (2 - delta) / (3 * N)


def efficiency_accounting(N: int, n: int, delta: float, M: int | None = None) -> dict:
    """Component counts behind :func:`particle_efficiency`.

    ``c``, ``q`` and ``b`` are the headline accounting (key bits,
    transmitted qubits, classical decoding bits). The ``simulated_*``
    fields count what the simulator actually moves: every sequence of n
    two-qubit states crosses all ``M + 1`` ring edges.
    """
    M = N if M is None else M
    c = (2 - delta) * n
    q = n * N
    b = 2 * n * N
    samples = math.floor(delta * n / N + 1e-9) * N
    return {
        "eta": particle_efficiency(N, delta),
        "c": c,
        "q": q,
        "b": b,
        "c_over_q_plus_b": c / (q + b),
        "simulated_state_hops": N * n * (M + 1),
        "simulated_qubit_hops": 2 * N * n * (M + 1),
        "simulated_key_bits": 2 * n - samples,
    }


def ops_parity(seq: TravellingSequence, n: int) -> np.ndarray:
    """Parity of the number of elementary U's applied per position, from the hop log."""
    counts = np.zeros(n, dtype=np.int64)
    for entry in seq.hop_log:
        if entry.t is not None:
            counts[entry.t] += len(entry.ops)
    return (counts % 2).astype(np.uint8)
