import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqka import qstate
from mqka.adversary import (
    COMPOSITE_SIGNS,
    AttackKind,
    AttackScenario,
    BasisPolicy,
    FakeTagMode,
    InterceptResend,
    TargetSet,
    build_entangled_family,
    check_usd_feasible,
    forge_tag,
    intercept_resend_hook,
    random_ancilla_family,
    state_set,
)
from mqka.bits import from_str, to_str, xor_all
from mqka.errors import ConfigError
from mqka.protocol import SessionConfig, init_session
from mqka.report import dumps
from mqka.simulate import run_batch, run_session, simulate_session

import oracles


def _intercept(policy, target_set=TargetSet.ANY, edges=((1, 2),), sequences=None):
    return AttackScenario(
        kind=AttackKind.INTERCEPT_RESEND,
        edges=edges,
        sequences=sequences,
        basis_policy=policy,
        target_set=target_set,
    )


# ---------------------------------------------------------------- validation


@pytest.mark.parametrize(
    "sc",
    [
        AttackScenario(kind=AttackKind.INTERCEPT_RESEND, edges=((1, 3),)),
        AttackScenario(kind=AttackKind.INTERCEPT_RESEND, sequences=(4,)),
        AttackScenario(kind=AttackKind.IMPERSONATE_USER, target=None),
        AttackScenario(kind=AttackKind.IMPERSONATE_USER, target=4),
        AttackScenario(kind=AttackKind.FORGED_TP_TAG, fake_tag_mode=FakeTagMode.CHOSEN, fake_tag="01"),
        AttackScenario(kind=AttackKind.FORGED_TP_TAG, fake_tag_mode=FakeTagMode.FLIP, flip_positions=(8,)),
    ],
)
def test_scenario_validation(sc):
    with pytest.raises(ConfigError):
        sc.validate(3, 3, 8)


def test_wraparound_edge_is_valid():
    AttackScenario(kind=AttackKind.INTERCEPT_RESEND, edges=((0, 1), (5, 0))).validate(3, 5, 4)


# ---------------------------------------------------------------- intercept-resend, per state


@pytest.mark.parametrize("x,y", oracles.PAIRS)
def test_always_x_leaves_even_states_alone(x, y):
    rng = np.random.default_rng(0)
    s = qstate.make_hadamard_state(x, y)
    for _ in range(20):
        assert intercept_resend_hook(s, BasisPolicy.ALWAYS_X, rng) == s


def test_always_z_resends_uniform_basis_states():
    rng = np.random.default_rng(1)
    log: list = []
    counts = np.zeros(4)
    for _ in range(20_000):
        out = intercept_resend_hook(qstate.make_hadamard_state(1, 1), BasisPolicy.ALWAYS_Z, rng, log)
        m, n = log[-1][1]
        assert out == qstate.make_basis_state(m, n)
        counts[2 * m + n] += 1
    sigma = np.sqrt(20_000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 5000) < 4 * sigma)


def test_random_policy_uses_both_bases():
    rng = np.random.default_rng(2)
    log: list = []
    for _ in range(4000):
        intercept_resend_hook(qstate.make_hadamard_state(0, 0), BasisPolicy.RANDOM_XZ, rng, log)
    frac_x = sum(b == "X" for b, _ in log) / len(log)
    assert abs(frac_x - 0.5) < 4 * np.sqrt(0.25 / 4000)


@settings(max_examples=100)
@given(st.sampled_from(list(BasisPolicy)), st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), max_size=5),
       st.integers(0, 2**32 - 1))
def test_resent_states_are_normalized(policy, ops, seed):
    s = qstate.make_hadamard_state(0, 1)
    for m, n in ops:
        s = qstate.apply_u(s, m, n)
    out = intercept_resend_hook(s, policy, np.random.default_rng(seed))
    assert abs(out.norm() - 1) < 1e-12


def test_state_set_classification():
    even = qstate.make_hadamard_state(1, 0)
    assert state_set(even) == "even"
    assert state_set(qstate.apply_u(even, 1, 1)) == "odd"


# ---------------------------------------------------------------- intercept-resend, session level


def _oracle_check(policy, target_set, sessions=3, n=256):
    """Empirical block error rate vs the mean exact oracle probability, per attacked set."""
    emp_err = 0
    expected = []
    for seed in range(sessions):
        cfg = SessionConfig(N=3, M=4, n=n, seed=100 + seed)
        eve = InterceptResend(_intercept(policy, target_set), np.random.default_rng(seed))
        session, _ = simulate_session(cfg, hooks=[eve])
        summary = eve.summarize(session)
        seen = set()
        for rec in eve.records:
            key = (rec.initiator, rec.t)
            if key in seen:
                continue
            seen.add(key)
            kind, p = oracles.intercept_error_probability(session, rec.initiator, rec.t, rec.edge, policy.value)
            assert kind == rec.state_set
            expected.append(p)
        emp_err += summary["block_errors"]
    return emp_err / len(expected), float(np.mean(expected)), len(expected)


@pytest.mark.parametrize(
    "policy,target_set,exact",
    [
        (BasisPolicy.ALWAYS_X, TargetSet.EVEN, 0.0),
        (BasisPolicy.ALWAYS_Z, TargetSet.EVEN, 0.75),
        (BasisPolicy.RANDOM_XZ, TargetSet.EVEN, 0.375),
        (BasisPolicy.ALWAYS_X, TargetSet.ODD, None),
        (BasisPolicy.ALWAYS_Z, TargetSet.ODD, None),
        (BasisPolicy.RANDOM_XZ, TargetSet.ODD, None),
    ],
)
def test_intercept_rates_match_density_matrix_oracle(policy, target_set, exact):
    emp, oracle, blocks = _oracle_check(policy, target_set)
    assert blocks > 500
    if exact is not None:
        assert oracle == pytest.approx(exact, abs=1e-12)
    sigma = np.sqrt(max(oracle * (1 - oracle), 1e-12) / blocks)
    assert abs(emp - oracle) <= max(4 * sigma, 1e-12)


def test_odd_set_oracle_value_is_three_quarters():
    # entangled states: the rate is pinned by the density-matrix oracle alone
    for policy in BasisPolicy:
        _, oracle, _ = _oracle_check(policy, TargetSet.ODD, sessions=1, n=64)
        assert oracle == pytest.approx(0.75, abs=1e-12)


def test_intercept_all_edges_counts_each_block_once():
    cfg = SessionConfig(N=2, M=3, n=8, seed=3, adversary=_intercept(BasisPolicy.ALWAYS_Z, edges=None))
    rep = run_session(cfg)
    out = rep["adversary_outcome"]
    assert out["attacked_blocks"] == 2 * 8
    assert out["measurements"] == 2 * 8 * 4
    assert 0 <= out["eve_block_guess_rate"] <= 1


def test_sequence_filter():
    cfg = SessionConfig(N=3, M=3, n=8, seed=3,
                        adversary=_intercept(BasisPolicy.ALWAYS_Z, edges=None, sequences=(2,)))
    session, rep = simulate_session(cfg)
    assert rep["keys"]["1"] == rep["keys"]["3"] == rep["expected_key"]


def test_all_position_attack_detection_band():
    cfg = SessionConfig(N=3, M=3, n=512, delta=0.5, seed=8,
                        adversary=_intercept(BasisPolicy.RANDOM_XZ, edges=None))
    rep = run_session(cfg)
    assert rep["detection"]["aborted"]
    assert rep["detection"]["error_rate"] > 0.2


# ---------------------------------------------------------------- no attack


def test_none_kind_is_byte_identical_to_honest():
    honest = SessionConfig(N=3, M=5, n=16, delta=0.5, seed=31)
    none = SessionConfig(N=3, M=5, n=16, delta=0.5, seed=31, adversary=AttackScenario())
    assert dumps(run_session(honest)) == dumps(run_session(none))
    assert dumps(run_batch(honest, 5)) == dumps(run_batch(none, 5))


# ---------------------------------------------------------------- forged tags


def test_forge_tag_modes():
    rng = np.random.default_rng(0)
    true = from_str("0110")
    assert to_str(forge_tag(true, FakeTagMode.ALL_ZERO, rng)) == "0000"
    assert to_str(forge_tag(true, FakeTagMode.CHOSEN, rng, chosen="1111")) == "1111"
    assert to_str(forge_tag(true, FakeTagMode.FLIP, rng)) == "1001"
    assert to_str(forge_tag(true, FakeTagMode.FLIP, rng, flip_positions=(0,))) == "1110"
    assert to_str(true) == "0110"
    with pytest.raises(ConfigError):
        forge_tag(true, FakeTagMode.CHOSEN, rng)


@pytest.mark.parametrize("kind", [AttackKind.IMPERSONATE_USER, AttackKind.FORGED_TP_TAG])
def test_forgery_equal_to_true_tag_is_honest(kind):
    for seed in range(5):
        base = SessionConfig(N=3, M=4, n=16, delta=0.5, seed=seed)
        s = init_session(base, np.random.default_rng(np.random.SeedSequence(seed)))
        true = s.h0 if kind is AttackKind.FORGED_TP_TAG else s.parties[2].h
        sc = AttackScenario(kind=kind, target=2, fake_tag_mode=FakeTagMode.CHOSEN, fake_tag=to_str(true))
        rep = run_session(SessionConfig(N=3, M=4, n=16, delta=0.5, seed=seed, adversary=sc))
        assert rep["agreement"] and rep["detection"]["error_rate"] == 0.0
        assert rep["adversary_outcome"]["forged_count"] == 0


def test_impersonation_keeps_tp_on_true_aggregate():
    sc = AttackScenario(kind=AttackKind.IMPERSONATE_USER, target=1, fake_tag_mode=FakeTagMode.ALL_ZERO)
    session, rep = simulate_session(SessionConfig(N=3, M=3, n=32, seed=4, adversary=sc))
    true_h0 = xor_all([p.h for p in session.parties.values()])
    assert np.array_equal(session.tp_encoding_tag, true_h0)
    assert not session.parties[1].encoding_tag.any()
    # classical publications are untouched
    assert to_str(session.C) == to_str(xor_all([p.B[0::2] for p in session.parties.values()]))


@pytest.mark.parametrize("kind", [AttackKind.IMPERSONATE_USER, AttackKind.FORGED_TP_TAG])
def test_complement_forgery_is_detected(kind):
    sc = AttackScenario(kind=kind, target=2, fake_tag_mode=FakeTagMode.FLIP)
    doc = run_batch(SessionConfig(N=3, M=3, n=64, delta=0.5, seed=17, adversary=sc), 200)
    assert doc["summary"]["abort_rate"] >= 0.99


@pytest.mark.parametrize("kind", [AttackKind.IMPERSONATE_USER, AttackKind.FORGED_TP_TAG])
def test_random_forgery_block_errors_are_uniform(kind):
    """Forged positions: every block is uniformly random (wrong w.p. 3/4); others are intact."""
    wrong_forged = total_forged = wrong_clean = 0
    mismatches = positions = 0
    for seed in range(40):
        sc = AttackScenario(kind=kind, target=3, fake_tag_mode=FakeTagMode.RANDOM)
        session, rep = simulate_session(SessionConfig(N=3, M=3, n=32, seed=seed, adversary=sc))
        forged = set(rep["adversary_outcome"]["forged_positions"])
        mismatches += len(forged)
        positions += 32
        expected = xor_all([p.S for p in session.parties.values()])
        for p in session.parties.values():
            for t in range(32):
                bad = bool(np.any(p.K[2 * t:2 * t + 2] != expected[2 * t:2 * t + 2]))
                if t in forged:
                    total_forged += 1
                    wrong_forged += bad
                else:
                    wrong_clean += bad
    assert wrong_clean == 0
    assert abs(mismatches / positions - 0.5) < 4 * np.sqrt(0.25 / positions)
    rate = wrong_forged / total_forged
    assert abs(rate - 0.75) < 4 * np.sqrt(0.75 * 0.25 / total_forged)


def test_single_flipped_tp_bit_matches_hypergeometric_oracle():
    N, n, delta, flipped, trials = 2, 8, 0.75, 5, 3000
    cfg = SessionConfig(
        N=N, M=N, n=n, delta=delta, seed=2,
        adversary=AttackScenario(kind=AttackKind.FORGED_TP_TAG, fake_tag_mode=FakeTagMode.FLIP,
                                 flip_positions=(flipped,)),
    )
    rate = run_batch(cfg, trials)["summary"]["abort_rate"]
    p = oracles.single_flip_detection_probability(n, N, cfg.samples_per_user, flipped)
    assert abs(rate - p) < 4 * np.sqrt(p * (1 - p) / trials)


def test_single_flip_undetected_when_block_not_sampled():
    cfg = SessionConfig(
        N=2, M=2, n=8, delta=0.5, seed=0,
        adversary=AttackScenario(kind=AttackKind.FORGED_TP_TAG, fake_tag_mode=FakeTagMode.FLIP,
                                 flip_positions=(3,)),
    )
    for seed in range(60):
        session, rep = simulate_session(cfg, seed=seed)
        sampled = {q for v in session.detection.samples.values() for q in v}
        if not sampled & {6, 7}:
            assert rep["detection"]["error_rate"] == 0.0


# ---------------------------------------------------------------- entangle-measure family


def test_family_rows_on_scalar_ancillas():
    fam = build_entangled_family(1, 1, 1, 1)
    assert np.array_equal(fam.alphas[4], 0.5 * np.ones(4))
    assert np.array_equal(fam.alphas[0], 0.5 * np.array([1, -1, -1, -1]))


def test_sign_table_structure():
    # odd rows: exactly one sign differs from the others; even rows: two minus signs or none
    for row in COMPOSITE_SIGNS[:4]:
        assert sorted(row.tolist()).count(-1) in (1, 3)
    for row in COMPOSITE_SIGNS[4:]:
        assert row.tolist().count(-1) in (0, 2)
    assert len({tuple(r) for r in COMPOSITE_SIGNS}) == 8


def test_orthonormal_ancillas_give_unit_composites():
    fam = build_entangled_family(*np.eye(4))
    assert np.allclose(np.linalg.norm(fam.alphas, axis=1), 1.0, atol=1e-15)


def test_dimension_mismatch_rejected():
    with pytest.raises(ConfigError):
        build_entangled_family([1, 0], [1, 0], [1, 0], [1])
    with pytest.raises(ConfigError):
        build_entangled_family(0, 0, 0, 0)


@pytest.mark.parametrize("d", [1, 2, 4, 8])
def test_usd_infeasible_random_families(d):
    rng = np.random.default_rng(d)
    for _ in range(25):
        fam = random_ancilla_family(d, rng)
        res = check_usd_feasible(fam)
        assert max(res.residuals) < 1e-10
        assert res.rank <= 5 and not res.feasible
        assert res.rank == oracles.gram_rank(fam.alphas)


def test_generic_rank_is_four():
    res = check_usd_feasible(random_ancilla_family(8, np.random.default_rng(0)))
    assert res.rank == 4


def test_equal_scalar_ancillas_stay_infeasible():
    res = check_usd_feasible(build_entangled_family(1, 1, 1, 1))
    assert not res.feasible
    assert res.rank == oracles.gram_rank(build_entangled_family(1, 1, 1, 1).alphas) == 4


@pytest.mark.parametrize("zeros", [(0,), (1, 3), (0, 1, 2)])
def test_zero_ancilla_slots_reduce_rank(zeros):
    anc = [np.array([1.0, 0.5]) for _ in range(4)]
    for k in zeros:
        anc[k] = np.zeros(2)
    fam = build_entangled_family(*anc)
    res = check_usd_feasible(fam)
    assert res.rank == 4 - len(zeros) == oracles.gram_rank(fam.alphas)
    assert max(res.residuals) < 1e-12
