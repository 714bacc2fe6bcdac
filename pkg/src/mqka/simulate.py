"""Run single sessions and seeded Monte Carlo batches.

Seeding scheme: trial ``k`` of a batch with master seed ``s`` uses the
64-bit seed drawn from ``SeedSequence(s, spawn_key=(k,))``. Inside a
session, the honest parties use ``SeedSequence(seed)`` and the adversary
uses ``SeedSequence(seed, spawn_key=(EVE_STREAM,))``, so attacking a
session never perturbs the parties' own randomness.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from mqka import qstate
from mqka.adversary import prepare_attack
from mqka.protocol import (
    SessionConfig,
    SessionState,
    detect_eavesdropping,
    extract_key,
    init_session,
    publish_bases,
    run_ring_pass,
)
from mqka.report import SCHEMA_VERSION, batch_summary, config_echo, session_report

EVE_STREAM = 0xE7E


def trial_seed(master: int, index: int) -> int:
    words = np.random.SeedSequence(master, spawn_key=(index,)).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def simulate_session(cfg: SessionConfig, seed: int | None = None, hooks=()) -> tuple[SessionState, dict]:
    """Run one full session and return the final state and its report dict.

    ``hooks`` are extra hop hooks run after the configured adversary's.
    """
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    eve_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(EVE_STREAM,)))
    session = init_session(cfg, rng)
    attack = prepare_attack(session, cfg.adversary, eve_rng)
    run_ring_pass(session, [*attack.hooks, *hooks])
    publish_bases(session, rng)
    for i in session.parties:
        extract_key(session, i, rng)
    detect_eavesdropping(session, rng)
    return session, session_report(session, seed, attack.summarize(session))


def run_session(cfg: SessionConfig, seed: int | None = None) -> dict:
    return simulate_session(cfg, seed)[1]


def _run_trial(args) -> dict:
    cfg, seed = args
    return run_session(cfg, seed)


def run_batch(
    cfg: SessionConfig,
    trials: int,
    seed: int | None = None,
    workers: int = 1,
    per_trial: bool = False,
) -> dict:
    """Run ``trials`` independent sessions; output is independent of ``workers``."""
    master = cfg.seed if seed is None else seed
    cfg = dataclasses.replace(cfg, seed=master)
    cfg.validate()
    jobs = [(cfg, trial_seed(master, k)) for k in range(trials)]
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_trial, jobs, chunksize=max(1, trials // (4 * workers))))
    else:
        reports = [_run_trial(job) for job in jobs]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": master,
        "trials": trials,
        "trial_seed_scheme": "SeedSequence(seed, spawn_key=(k,)).generate_state(2, uint32) -> lo | hi<<32",
        "config": config_echo(cfg),
        "summary": batch_summary(reports),
    }
    if per_trial:
        doc["per_trial"] = reports
    return doc


class StateRecorder:
    """Hop hook that snapshots state labels as each sequence leaves a node."""

    def __init__(self):
        self.rows: dict[int, list[tuple[str, list[str]]]] = {}

    def __call__(self, edge, seq) -> None:
        labels = [qstate.describe_state(s) for s in seq.states]
        self.rows.setdefault(seq.initiator, []).append((f"{edge[0]}->{edge[1]}", labels))
