import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from l0prox.core import HypothesisError, ProblemInstance, RefuseEnumeration, objective, sigma_min
from l0prox.pgd import PgdOptions, ista_init, pgd_solve
from l0prox.randomized import (
    SketchedDictionary, identity_transform, pgd_rdr_solve, range_finder, rdr_ista_init,
    reduce_instance,
)
from l0prox.rng import stream
from l0prox.synth import random_orthonormal
from l0prox.theory import (
    b_feasible_interval, b_feasible_interval_joint, brute_force_global, degree_of_nonconvexity,
    degree_of_nonconvexity_grid, halko_error_constant, local_solution_residual,
    product_projection_check, rdr_gap_bounds, rma_gap_bounds, sparse_eigenvalues, theorem1_bound,
)

from conftest import make_instance


def grid_theta(t, kappa, lam, b, num=100_001):
    """Supremum over a plain grid, written from the definition."""
    s = np.linspace(t - 4 * b - abs(t), t + 4 * b + abs(t), num)
    # the supremum may be a limit as s -> t, so sample next to t as well
    s = np.concatenate([s, t + np.array([-1e-12, 1e-12])])
    s = s[s != t]

    def rdot(v):
        return np.where(np.abs(v) < b, lam / b * np.sign(v), 0.0)

    return float(np.max(-np.sign(s - t) * (rdot(s) - rdot(np.array([t]))[0]) - kappa * np.abs(s - t)))


# --- oracle ------------------------------------------------------------------

def test_oracle_orthonormal_example():
    inst = ProblemInstance(np.eye(2), np.array([1.0, 0.05]), lam=0.01)
    orc = brute_force_global(inst)
    np.testing.assert_array_equal(orc.code, [1.0, 0.0])
    assert orc.objective == pytest.approx(0.0125)
    assert orc.support == (0,)
    assert orc.supports_enumerated == 4


def test_oracle_large_lambda_gives_zero():
    inst = make_instance(4, 6, 0, lam=1.5)
    assert inst.signal @ inst.signal < inst.lam
    orc = brute_force_global(inst)
    assert orc.support == () and orc.objective == pytest.approx(inst.signal @ inst.signal)


def test_oracle_dominates_pgd():
    for seed in range(100):
        inst = make_instance(4, 6, seed, lam=0.01 + 0.001 * seed)
        orc = brute_force_global(inst)
        rep = pgd_solve(inst, ista_init(inst))
        assert orc.objective <= rep.objective + 1e-12


def test_oracle_ties_are_sorted_and_complete():
    # two identical columns: supports {0} and {1} tie exactly
    D = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    inst = ProblemInstance(D, np.array([0.8, 0.1]), lam=0.05)
    orc = brute_force_global(inst)
    assert orc.ties == [(0,), (1,)]
    assert orc.support == (0,)
    assert len(orc.tie_codes) == 2


def test_oracle_minimum_over_all_supports():
    inst = make_instance(5, 7, 3, lam=0.02)
    orc = brute_force_global(inst)
    for r in range(8):
        for S in itertools.combinations(range(7), r):
            z = np.zeros(7)
            if S:
                z[list(S)] = np.linalg.lstsq(inst.dictionary[:, S], inst.signal, rcond=None)[0]
            assert orc.objective <= objective(inst, z) + 1e-12


def test_oracle_refuses_large_n():
    with pytest.raises(RefuseEnumeration):
        brute_force_global(ProblemInstance(np.ones((2, 21)) / 10, np.ones(2) / 2, lam=0.1))


def test_oracle_max_support_size():
    inst = make_instance(6, 8, 1, lam=0.001)
    orc = brute_force_global(inst, max_support_size=1)
    assert len(orc.support) <= 1
    assert orc.supports_enumerated == 9


# --- degree of nonconvexity --------------------------------------------------

def test_theta_examples():
    assert degree_of_nonconvexity(0.0, 1.0, 1.0, 0.5) == (1.5, False)
    assert degree_of_nonconvexity(0.0, 10.0, 1.0, 0.5).value == 0.0
    assert degree_of_nonconvexity(0.3, 1.0, 1.0, 0.5).grid_evaluated


def test_theta_closed_form_matches_grid():
    rng = np.random.default_rng(0)
    for _ in range(100):
        lam, b = rng.uniform(0.01, 1), rng.uniform(0.05, 1)
        t = rng.choice([-1, 1]) * rng.uniform(1.001 * b, 4 * b)
        kappa = rng.uniform(0, 3 * lam / b**2)
        assert degree_of_nonconvexity(t, kappa, lam, b).value == pytest.approx(
            grid_theta(t, kappa, lam, b), abs=1e-3)


def test_theta_negative_argument_is_symmetric():
    # for t < -b the supremum is reached near s = -b, at distance |t| - b
    lam, b, kappa = 1.0, 0.5, 0.8
    t = -1.2
    assert degree_of_nonconvexity(t, kappa, lam, b).value == pytest.approx(lam / b - kappa * 0.7)
    assert degree_of_nonconvexity(t, kappa, lam, b).value == pytest.approx(grid_theta(t, kappa, lam, b), abs=1e-3)


@given(st.floats(-0.99, 0.99).filter(lambda v: v != 0), st.floats(0, 5))
def test_theta_grid_region(frac, kappa):
    lam, b = 0.3, 0.4
    val = degree_of_nonconvexity(frac * b, kappa, lam, b)
    assert val.grid_evaluated
    assert val.value == pytest.approx(grid_theta(frac * b, kappa, lam, b), abs=1e-3)
    assert val.value == pytest.approx(degree_of_nonconvexity_grid(frac * b, kappa, lam, b), abs=1e-12)


# --- b interval and local solutions ------------------------------------------

def test_b_interval_orthonormal_example():
    inst = ProblemInstance(np.eye(2), np.array([1.0, 0.05]), lam=0.01)
    z = np.array([1.0, 0.0])
    assert b_feasible_interval(z, z, inst) == pytest.approx(0.1)


def test_b_interval_zero_gradient_convention():
    inst = ProblemInstance(np.eye(3), np.array([0.7, -0.4, 0.0]), lam=0.01)
    z = np.array([0.7, -0.4, 0.0])
    assert b_feasible_interval(z, z, inst) == pytest.approx(0.4)


def test_b_interval_empty():
    inst = ProblemInstance(np.eye(2), np.array([0.5, 0.5]), lam=0.01)
    z = np.array([0.5, 0.0])
    assert b_feasible_interval(z, z, inst) is not None
    zero_entry = np.array([0.5, 0.0])
    assert b_feasible_interval(zero_entry, np.zeros(2), inst) is not None


def test_b_interval_below_magnitudes():
    for seed in range(100):
        inst = make_instance(6, 8, seed)
        zh = pgd_solve(inst, ista_init(inst)).code
        zs = brute_force_global(inst).code
        bm = b_feasible_interval(zh, zs, inst)
        mags = np.abs(np.concatenate([zh[zh != 0], zs[zs != 0]]))
        if bm is not None and mags.size:
            assert bm <= mags.min()


def test_joint_condition_differs_from_eq12_form():
    inst = ProblemInstance(np.eye(2), np.array([1.0, 0.05]), lam=0.01)
    z = np.array([1.0, 0.0])
    # dQ/dz_2 = -0.1 < lam, so the (dQ - lam)_+ denominator vanishes
    assert b_feasible_interval_joint([(inst, z)]) == pytest.approx(1.0)
    assert b_feasible_interval(z, z, inst) == pytest.approx(0.1)


def test_local_residual_at_oracle_and_pgd():
    checked = 0
    for seed in range(40):
        inst = make_instance(4, 6, seed, lam=0.03)
        zs = brute_force_global(inst).code
        zh = pgd_solve(inst, ista_init(inst), PgdOptions(max_iter=1_000_000)).code
        bm = b_feasible_interval(zh, zs, inst)
        if bm is None or not math.isfinite(bm):
            continue
        checked += 1
        assert local_solution_residual(zs, inst, bm / 2) <= 1e-8
        assert local_solution_residual(zh, inst, bm / 2) <= 1e-6
    assert checked >= 30


def test_local_residual_perturbation():
    inst = make_instance(4, 6, 5, lam=0.03)
    zs = brute_force_global(inst).code
    b = b_feasible_interval(zs, zs, inst) / 2
    j = int(np.flatnonzero(zs)[0])
    z = zs.copy()
    z[j] += 1e-3
    g = 2 * inst.dictionary.T @ (inst.dictionary @ z - inst.signal)
    res = local_solution_residual(z, inst, b)
    # off-support coordinates can still be cancelled; on-support ones cannot
    on = np.flatnonzero(z)
    assert res == pytest.approx(np.linalg.norm(g[on]), abs=1e-10)


def test_local_residual_kink_selection():
    inst = ProblemInstance(np.eye(1), np.array([0.5]), lam=0.1)
    # z = b: gradient 2(z - x) = -0.4 is cancelled by a selection in [0, lam/b]
    assert local_solution_residual(np.array([0.3]), inst, 0.3) == pytest.approx(0.4 - 0.1 / 0.3)
    assert local_solution_residual(np.array([0.45]), inst, 0.3) == pytest.approx(0.1)


# --- deterministic gap certificate -----------------------------------------

def test_theorem1_identical_codes():
    inst = make_instance(6, 8, 0)
    zs = brute_force_global(inst).code
    cert = theorem1_bound(zs, zs, inst)
    assert cert.symmetric_difference == ()
    assert cert.bound_value == 0.0 and cert.actual_gap == 0.0 and cert.holds


def test_theorem1_zero_bound_regime():
    lam, scale = 0.01, 0.98
    hits = 0
    for seed in range(20):
        st_ = stream(seed, 50)
        D = random_orthonormal(4, 4, st_) * scale
        x = D @ np.array([0.6, -0.5, 0.0, 0.0]) + 0.002 * st_.standard_normal(4)
        inst = ProblemInstance(D, x, lam)
        zh = pgd_solve(inst, ista_init(inst)).code
        zs = brute_force_global(inst).code
        bm = b_feasible_interval(zh, zs, inst)
        kappa0 = sigma_min(D)
        kappa = kappa0**2 / 2
        lo = math.sqrt(lam / kappa)
        if bm is None or lo >= bm:
            continue
        b = (lo + bm) / 2
        terms = [degree_of_nonconvexity(v, kappa, lam, b).value for v in zh]
        if any(terms):
            continue
        hits += 1
        cert = theorem1_bound(zh, zs, inst, kappa=kappa, b=b)
        assert cert.assumptions_ok
        assert cert.bound_value == 0.0
        np.testing.assert_allclose(zh, zs, atol=1e-12)
    assert hits >= 5


def test_theorem1_soundness_random():
    binding = 0
    for seed in range(50):
        inst = make_instance(6, 8, seed)
        zh = pgd_solve(inst, ista_init(inst)).code
        orc = brute_force_global(inst)
        cert = theorem1_bound(zh, orc.code, inst, ties=orc.tie_codes)
        binding += cert.assumptions_ok
        assert not cert.violated
    assert binding >= 40


def test_theorem1_flags_bad_parameters():
    inst = make_instance(6, 8, 3)
    zh = pgd_solve(inst, ista_init(inst)).code
    zs = brute_force_global(inst).code
    cert = theorem1_bound(zh, zs, inst, kappa=10.0)
    assert not cert.assumptions["kappa_range"] and not cert.assumptions_ok
    cert = theorem1_bound(zh, zs, inst, b=100.0)
    assert not cert.assumptions["b_feasible"]


def test_certificate_serializes():
    inst = make_instance(6, 8, 3)
    zs = brute_force_global(inst).code
    d = theorem1_bound(zs, zs, inst).to_dict()
    assert d["kind"] == "Theorem1" and d["holds"]


# --- Halko constant ----------------------------------------------------------

def test_halko_zero_when_rank_small():
    rng = np.random.default_rng(0)
    D = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 12))
    assert halko_error_constant(D, 6, 2) <= 1e-12 * np.linalg.norm(D)
    assert halko_error_constant(np.diag([1.0, 0.5, 0.0, 0.0]), 6, 2) == 0.0


def test_halko_plug_in_value():
    D = np.diag([1.0, 0.5, 0.1, 0.01])
    expected = (1 + 17 * math.sqrt(1.5)) * 0.1 + 8 * math.sqrt(6) / 5 * math.sqrt(0.1**2 + 0.01**2)
    assert halko_error_constant(D, 6, 2) == pytest.approx(expected, rel=1e-14)


@given(st.integers(0, 500), st.floats(0.05, 0.8))
def test_halko_monotone_in_k0_for_decaying_spectra(seed, rate):
    st_ = stream(seed, 0)
    U = random_orthonormal(14, 12, st_)
    V = random_orthonormal(15, 12, st_)
    D = (U * rate ** np.arange(12)) @ V.T
    vals = [halko_error_constant(D, k0 + 4, k0) for k0 in range(2, 9)]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(vals, vals[1:]))


def test_halko_not_monotone_for_flat_spectrum():
    # both coefficients grow with k0 at fixed p, so a flat spectrum increases C
    vals = [halko_error_constant(np.eye(16), k0 + 4, k0) for k0 in range(2, 9)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_halko_hypotheses():
    with pytest.raises(HypothesisError):
        halko_error_constant(np.eye(8), 5, 2)
    with pytest.raises(HypothesisError):
        halko_error_constant(np.eye(8), 6, 1)


# --- randomized-variant certificates -----------------------------------------

def test_rma_exact_sketch_degenerates():
    rng = np.random.default_rng(3)
    D = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 8))
    D /= np.linalg.norm(D, axis=0).max() * 1.01
    x = D @ np.array([0.8, 0, 0, 0, 0, 0, 0, 0]) + 0.01 * rng.standard_normal(6)
    inst = ProblemInstance(D, x, 0.02)
    sk = range_finder(D, 6, 0)
    zs = brute_force_global(inst)
    zt = brute_force_global(inst.with_data(sk.dense()))
    z0 = ista_init(inst)
    from l0prox.randomized import pgd_rma_solve
    zh = pgd_rma_solve(inst, 6, 0, z0, sketch=sk).code
    cert = rma_gap_bounds(zh, zt.code, zs.code, inst, sk, 2, z0)
    assert cert.auxiliary["C_k_k0"] <= 1e-12
    assert cert.parts["optimal"].actual_gap <= 1e-8
    assert cert.holds


def test_rma_identical_codes_zero_gap():
    inst = make_instance(6, 8, 4)
    sk = SketchedDictionary(np.eye(6), inst.dictionary.copy(), 6, 0)
    zs = brute_force_global(inst).code
    cert = rma_gap_bounds(zs, zs, zs, inst, sk, 2, ista_init(inst))
    assert cert.actual_gap == 0.0 and cert.holds


def test_rdr_identity_transform():
    inst = make_instance(6, 8, 6)
    T = identity_transform(6)
    z0 = ista_init(inst)
    zs = brute_force_global(inst)
    zh = pgd_rdr_solve(inst, 6, "identity", 0, z0, transform=T).code
    cert = rdr_gap_bounds(zh, zs.code, zs.code, inst, T, z0, c=1.0, delta=0.1)
    assert cert.parts["optimal"].actual_gap == 0.0
    assert cert.auxiliary["eps_m"] > 0
    assert cert.holds
    assert not cert.assumptions["m_hypothesis"]


def test_rdr_zero_signal():
    inst = ProblemInstance(np.eye(3) * 0.5, np.zeros(3), lam=0.1)
    z = np.zeros(3)
    cert = rdr_gap_bounds(z, z, z, inst, identity_transform(3), z)
    assert cert.actual_gap == 0.0 and cert.holds


def test_rdr_binding_certificates_hold():
    for seed in range(10):
        inst = make_instance(6, 8, seed)
        from l0prox.randomized import sample_jl
        T = sample_jl(16, 6, "gaussian", seed)
        red = reduce_instance(inst, T)
        z0 = rdr_ista_init(red)
        zh = pgd_rdr_solve(inst, 16, "gaussian", seed, z0, transform=T).code
        zb = brute_force_global(red.unscaled()).code
        zs = brute_force_global(inst).code
        cert = rdr_gap_bounds(zh, zb, zs, inst, T, z0, c=1.0, delta=0.1)
        assert cert.assumptions["m_hypothesis"]
        assert not cert.parts["reduced"].violated


# --- sparse eigenvalues and product projection -------------------------------

def test_sparse_eigenvalues_identity():
    for m in range(1, 5):
        assert sparse_eigenvalues(np.eye(4), m) == pytest.approx((1.0, 1.0))


def test_sparse_eigenvalues_single_column():
    rng = np.random.default_rng(0)
    D = rng.standard_normal((5, 8))
    norms = np.linalg.norm(D, axis=0) ** 2
    assert sparse_eigenvalues(D, 1) == pytest.approx((norms.min(), norms.max()))


def test_sparse_eigenvalues_pairs():
    rng = np.random.default_rng(1)
    D = rng.standard_normal((5, 8))
    svals = [np.linalg.svd(D[:, list(S)], compute_uv=False) for S in itertools.combinations(range(8), 2)]
    lo = min(s[-1] ** 2 for s in svals)
    hi = max(s[0] ** 2 for s in svals)
    assert sparse_eigenvalues(D, 2) == pytest.approx((lo, hi), rel=1e-10)


def test_product_projection_trivial_and_hypothesis():
    A = np.ones((3, 10))
    assert product_projection_check(A, np.zeros((10, 2)), "gaussian", 32, 1.0, 0.1, 20) == 0.0
    with pytest.raises(HypothesisError):
        product_projection_check(A, np.ones((10, 2)), "gaussian", 4, 1.0, 0.1, 5)


def test_product_projection_monotone_in_m():
    rng = np.random.default_rng(5)
    A, B = rng.standard_normal((10, 30)), rng.standard_normal((30, 10))
    # both sides scale like 1/sqrt(m); c = 0.2 puts the threshold just above
    # the typical error, where tails thin out as m grows
    rates = [product_projection_check(A, B, "sign", m, 0.2, 0.1, 200) for m in (32, 64, 128)]
    assert rates[0] >= rates[1] >= rates[2]
    assert rates[0] > 0
    assert [product_projection_check(A, B, "gaussian", m, 1.0, 0.1, 100) for m in (32, 64, 128)] == [0.0] * 3
