"""Seedable simulator of authenticated multiparty quantum key agreement on an optical ring."""

from mqka.protocol import SessionConfig, particle_efficiency
from mqka.simulate import run_batch, run_session, simulate_session

__all__ = ["SessionConfig", "particle_efficiency", "run_batch", "run_session", "simulate_session"]
