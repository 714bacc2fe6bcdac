"""Keyed-hash identity tags and the identity-operation selector.

Each user shares a master key with the third party. The per-session tag
is ``h_i = f_k(ID_i || r_i || r_0)`` truncated to ``n`` bits, where ``f``
is an HMAC run in counter mode. One tag bit governs the identity encoding
of one two-qubit state. The third party encodes with the XOR of all
users' tags, so honest tags cancel out of the operation-count parity.
"""

from __future__ import annotations

import enum
import hashlib
import hmac

import numpy as np

from mqka.bits import to_str
from mqka.errors import ConfigError

DEFAULT_MAC = "hmac-sha256"
DEFAULT_KEY_BYTES = 32


class IdentityOp(enum.Enum):
    SINGLE_U00 = "U00"
    DOUBLE_U01_U10 = "U01U10"

    @property
    def ops(self) -> tuple[tuple[int, int], ...]:
        """Elementary phase reversals, in application order."""
        return _OPS[self]


_OPS = {IdentityOp.SINGLE_U00: ((0, 0),), IdentityOp.DOUBLE_U01_U10: ((1, 0), (0, 1))}

def mac_digest(mac: str) -> str:
    """Map a MAC name such as ``hmac-sha256`` to its hashlib digest name."""
    prefix = "hmac-"
    if not mac.startswith(prefix):
        raise ConfigError(f"unsupported MAC {mac!r}; expected 'hmac-<digest>'")
    digest = mac[len(prefix):]
    if digest not in hashlib.algorithms_available:
        raise ConfigError(f"unknown digest {digest!r} in MAC {mac!r}")
    return digest


def generate_master_key(rng: np.random.Generator, length: int = DEFAULT_KEY_BYTES) -> bytes:
    return rng.bytes(length)


def derive_tag(
    key: bytes,
    id_bits,
    r_user,
    r_tp,
    n: int,
    mac: str = DEFAULT_MAC,
) -> np.ndarray:
    """Return the ``n``-bit identity tag for one user and session.

    Block ``c`` of the keystream is ``HMAC(key, c (4 bytes BE) || msg)``
    where ``msg`` is the ASCII concatenation of the three bit strings;
    blocks are appended until ``n`` bits are available.
    """
    if n < 1:
        raise ConfigError("tag length n must be >= 1")
    if len(r_user) == 0 or len(r_tp) == 0:
        raise ConfigError("session random strings must be nonempty")
    digest = mac_digest(mac)
    msg = (to_str(id_bits) + to_str(r_user) + to_str(r_tp)).encode("ascii")
    stream = bytearray()
    counter = 0
    while len(stream) * 8 < n:
        stream += hmac.new(key, counter.to_bytes(4, "big") + msg, digest).digest()
        counter += 1
    return np.unpackbits(np.frombuffer(bytes(stream), dtype=np.uint8))[:n]


def aggregate_tags(tags) -> np.ndarray:
    """Third-party tag: bitwise XOR of all users' tags."""
    tags = [np.asarray(t, dtype=np.uint8) for t in tags]
    if len(tags) < 2:
        raise ConfigError("aggregate_tags needs at least two tags")
    lengths = {len(t) for t in tags}
    if len(lengths) != 1:
        raise ConfigError(f"tag length mismatch: {sorted(lengths)}")
    return np.bitwise_xor.reduce(np.stack(tags), axis=0)


def select_identity_op(h_bit: int, b_bit: int) -> IdentityOp:
    return IdentityOp.SINGLE_U00 if (h_bit ^ b_bit) == 0 else IdentityOp.DOUBLE_U01_U10


def selector_bits(tag, basis_pad) -> np.ndarray:
    """Per-position selector ``h_t XOR b_(2t-1)``; 1 means DOUBLE."""
    tag = np.asarray(tag, dtype=np.uint8)
    return tag ^ np.asarray(basis_pad, dtype=np.uint8)[0::2]
