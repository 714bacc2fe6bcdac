"""Bit-string helpers. Bit strings are 1-D ``uint8`` numpy arrays of 0/1."""

from __future__ import annotations

import numpy as np

from mqka.errors import ConfigError

_SEPARATORS = str.maketrans("", "", ", _")


def from_str(text: str) -> np.ndarray:
    """Parse ``"01,101,011"`` style text; commas, spaces and underscores are ignored."""
    cleaned = text.strip().strip('"').translate(_SEPARATORS)
    if not cleaned or set(cleaned) - {"0", "1"}:
        raise ConfigError(f"not a bit string: {text!r}")
    return np.frombuffer(cleaned.encode("ascii"), dtype=np.uint8) - ord("0")


def to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def random_bits(rng: np.random.Generator, k: int) -> np.ndarray:
    return rng.integers(0, 2, size=k, dtype=np.uint8)


def xor_all(strings) -> np.ndarray:
    strings = [np.asarray(s, dtype=np.uint8) for s in strings]
    return np.bitwise_xor.reduce(np.stack(strings), axis=0)
