"""Tests for cross-dependence solving, assembly, and closure verification."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracles import (
    cross_condition_residuals,
    dense_cross_solve,
    partial_autocorr_oracle,
    random_subprocess_corr,
)
from mcvar.closure import (
    CrossFixedBlock,
    DegenerateCrossPair,
    Partition,
    SubprocessCorr,
    assemble_full_R,
    backward_predictors,
    build_G,
    build_H,
    coefficient_block_zeros,
    cross_pair_residual,
    fixed_lag_for_labels,
    forward_predictors,
    reorder_time_major,
    solve_cross_pair,
    verify_closure,
)
from mcvar.varprocess import VarRepresentation, durbin_levinson, implied_autocov


def scalar_sub(values):
    return SubprocessCorr(blocks=tuple(np.array([[v]]) for v in values))


# ---------------------------------------------------------------- containers


def test_partition_validation():
    p = Partition(sets=((0, 2), (1,)), d=3)
    assert p.n == 2
    assert p.complement(0) == (1,)
    assert p.complement(1) == (0, 2)
    with pytest.raises(ValueError):
        Partition(sets=((0,), (2,)), d=3)  # gap
    with pytest.raises(ValueError):
        Partition(sets=((1, 0),), d=2)  # not increasing
    with pytest.raises(ValueError):
        Partition(sets=((0, 1), (1,)), d=2)  # duplicate
    with pytest.raises(ValueError):
        Partition(sets=((0,), ()), d=1)  # empty set


def test_subprocess_corr_validation():
    ok = scalar_sub([1.0, 0.5])
    assert ok.dim == 1 and ok.order == 1
    assert_allclose(ok.block(-1), ok.block(1).T)
    with pytest.raises(ValueError):
        SubprocessCorr(blocks=(np.array([[2.0]]), np.array([[0.5]])))  # diag != 1
    with pytest.raises(ValueError):
        SubprocessCorr(
            blocks=(np.array([[1.0, 0.3], [0.6, 1.0]]), np.eye(2))
        )  # lag-0 asymmetric
    with pytest.raises(ValueError):
        SubprocessCorr(blocks=(np.eye(2), np.zeros((3, 3))))  # shape mismatch


def test_subprocess_corr_toeplitz_and_pd():
    sub = scalar_sub([1.0, -0.8, 0.6])
    t = sub.toeplitz()
    expected = np.array([
        [1.0, -0.8, 0.6],
        [-0.8, 1.0, -0.8],
        [0.6, -0.8, 1.0],
    ])
    assert_allclose(t, expected)
    assert sub.is_pd()
    assert not scalar_sub([1.0, 1.0]).is_pd()


def test_fixed_lag_for_labels():
    assert fixed_lag_for_labels((1, 1), 2) == 0
    assert fixed_lag_for_labels((2, 2), 3) == 0
    assert fixed_lag_for_labels((1, 2), 2) == -2
    assert fixed_lag_for_labels((2, 1), 2) == 2
    with pytest.raises(ValueError):
        fixed_lag_for_labels((0, 1), 2)


# ------------------------------------------------------------ banded systems


def test_predictors_known_ar2():
    sub = scalar_sub([1.0, -0.8, 0.6])
    fwd = forward_predictors(sub)
    bwd = backward_predictors(sub)
    assert_allclose(fwd[0][0, 0], -8.0 / 9.0, atol=1e-12)
    assert_allclose(fwd[1][0, 0], -1.0 / 9.0, atol=1e-12)
    # scalar reversibility: backward coefficients are the forward reversed
    assert_allclose(bwd[0][0, 0], -1.0 / 9.0, atol=1e-12)
    assert_allclose(bwd[1][0, 0], -8.0 / 9.0, atol=1e-12)


def test_banded_layout_scalar_k2():
    p1 = np.array([[0.7]])
    p2 = np.array([[-0.2]])
    g = build_G([p1, p2], 2, 1)
    assert_allclose(g, np.array([
        [0.0, -0.2, 0.7, -1.0, 0.0],
        [0.0, 0.0, -0.2, 0.7, -1.0],
    ]))
    h = build_H([p1, p2], 2, 1)
    assert_allclose(h, np.array([
        [-1.0, -0.2, 0.7, 0.0, 0.0],
        [0.0, -1.0, -0.2, 0.7, 0.0],
    ]))


# ---------------------------------------------------------------- the solver


@pytest.mark.parametrize("labels", [(1, 1), (2, 2)])
@pytest.mark.parametrize("di,dj,k", [(1, 1, 1), (1, 1, 2), (2, 1, 2), (2, 2, 1), (2, 2, 2), (1, 2, 3)])
def test_solver_matches_dense_probing_oracle(labels, di, dj, k):
    rng = np.random.default_rng(1000 * di + 100 * dj + 10 * k + labels[0])
    ri = random_subprocess_corr(rng, di, k)
    rj = random_subprocess_corr(rng, dj, k)
    value = 0.3 * rng.uniform(-1.0, 1.0, size=(di, dj))
    fixed = CrossFixedBlock(pair=(0, 1), lag=0, value=value)
    sol = solve_cross_pair(ri, rj, labels, fixed)
    ref = dense_cross_solve(
        [ri.block(l) for l in range(k + 1)],
        [rj.block(l) for l in range(k + 1)],
        labels,
        0,
        value,
    )
    for l in range(-k, k + 1):
        assert_allclose(sol.block(l), ref[l], atol=1e-8)
    # residuals of the defining conditions vanish at the returned solution
    assert cross_pair_residual(ri, rj, labels, sol) < 1e-9
    res = cross_condition_residuals(
        [ri.block(l) for l in range(k + 1)],
        [rj.block(l) for l in range(k + 1)],
        labels,
        {l: sol.block(l) for l in range(-k, k + 1)},
    )
    assert max(np.max(np.abs(r)) for r in res) < 1e-9


@pytest.mark.parametrize("labels", [(1, 2), (2, 1)])
def test_mixed_labels_zero_except_fixed(labels):
    rng = np.random.default_rng(42)
    k = 2
    ri = random_subprocess_corr(rng, 2, k)
    rj = random_subprocess_corr(rng, 1, k)
    lag = fixed_lag_for_labels(labels, k)
    value = np.array([[0.25], [-0.1]])
    sol = solve_cross_pair(ri, rj, labels, CrossFixedBlock(pair=(0, 1), lag=lag, value=value))
    assert_allclose(sol.block(lag), value)
    for l in range(-k, k + 1):
        if l != lag:
            assert np.all(sol.block(l) == 0.0)  # exact zeros, not just small
    assert cross_pair_residual(ri, rj, labels, sol) == 0.0


def test_solver_closed_form_bivariate_lag1():
    # Two scalar AR(1) margins, k = 1.  With both labels 1 the solution is
    # Sigma_{12,1} = rho_1 c0 and Sigma_{12,-1} = rho_2 c0; with both labels 2
    # the two lags swap roles.
    rho1, rho2, c0 = 0.9, -0.9, 0.3
    ri = scalar_sub([1.0, rho1])
    rj = scalar_sub([1.0, rho2])
    fixed = CrossFixedBlock(pair=(0, 1), lag=0, value=[[c0]])
    s11 = solve_cross_pair(ri, rj, (1, 1), fixed)
    assert_allclose(s11.block(1)[0, 0], rho1 * c0, atol=1e-12)
    assert_allclose(s11.block(-1)[0, 0], rho2 * c0, atol=1e-12)
    s22 = solve_cross_pair(ri, rj, (2, 2), fixed)
    assert_allclose(s22.block(1)[0, 0], rho2 * c0, atol=1e-12)
    assert_allclose(s22.block(-1)[0, 0], rho1 * c0, atol=1e-12)


def test_solver_input_validation():
    ri = scalar_sub([1.0, 0.5, 0.2])
    rj = scalar_sub([1.0, 0.4])
    with pytest.raises(ValueError):
        solve_cross_pair(ri, rj, (1, 1), CrossFixedBlock(pair=(0, 1), lag=0, value=[[0.1]]))
    rj2 = scalar_sub([1.0, 0.4, 0.1])
    with pytest.raises(ValueError):
        solve_cross_pair(ri, rj2, (1, 1), CrossFixedBlock(pair=(0, 1), lag=1, value=[[0.1]]))
    with pytest.raises(ValueError):
        solve_cross_pair(ri, rj2, (1, 1), CrossFixedBlock(pair=(0, 1), lag=0, value=[[0.1, 0.2]]))


def test_degenerate_pair_raises():
    # rho_1 = 0 and rho_2 -> 1 makes the condition system singular when both
    # labels are 1: its determinant is proportional to 1 - phi_{i,2} phi_{j,2}.
    sub = scalar_sub([1.0, 0.0, 1.0 - 1e-12])
    fixed = CrossFixedBlock(pair=(0, 1), lag=0, value=[[0.2]])
    with pytest.raises(DegenerateCrossPair) as exc:
        solve_cross_pair(sub, sub, (1, 1), fixed)
    assert exc.value.pair == (0, 1)
    assert isinstance(exc.value, np.linalg.LinAlgError)


# ------------------------------------------------------- assembly and layout


def build_two_sub_model(labels, c0=0.3, k=2):
    ri = scalar_sub([1.0, -0.8, 0.6][: k + 1])
    rj = scalar_sub([1.0, 0.6, 0.5][: k + 1])
    lag = fixed_lag_for_labels(labels, k)
    d_i, d_j = ri.dim, rj.dim
    value = np.full((d_i, d_j), c0)
    sol = solve_cross_pair(ri, rj, labels, CrossFixedBlock(pair=(0, 1), lag=lag, value=value))
    part = Partition(sets=((0,), (1,)), d=2)
    rp = assemble_full_R(part, [ri, rj], [sol])
    return part, ri, rj, sol, rp


def test_assemble_layout_and_symmetry():
    part, ri, rj, sol, rp = build_two_sub_model((1, 1))
    k = 2
    assert rp.shape == (6, 6)
    assert_allclose(rp, rp.T, atol=1e-12)
    assert_allclose(rp[:3, :3], ri.toeplitz())
    assert_allclose(rp[3:, 3:], rj.toeplitz())
    for r in range(3):
        for s in range(3):
            assert_allclose(rp[r, 3 + s], sol.block(s - r)[0, 0])


def test_reorder_time_major_entrywise():
    # three variables split as {0, 2} and {1}: every entry of the time-major
    # matrix must equal the corresponding sub-process or cross block entry.
    rng = np.random.default_rng(5)
    k = 2
    ra = random_subprocess_corr(rng, 2, k)
    rb = random_subprocess_corr(rng, 1, k)
    fixed = CrossFixedBlock(pair=(0, 1), lag=0, value=0.2 * rng.uniform(-1, 1, (2, 1)))
    sol = solve_cross_pair(ra, rb, (1, 1), fixed)
    part = Partition(sets=((0, 2), (1,)), d=3)
    rp = assemble_full_R(part, [ra, rb], [sol])
    rtm = reorder_time_major(rp, part, k)
    d = 3
    local = {0: (0, 0), 2: (0, 1), 1: (1, 0)}  # global var -> (sub, local idx)

    def expected(r, s, ga, gb):
        ia, la = local[ga]
        ib, lb = local[gb]
        l = s - r
        if ia == ib:
            blk = (ra if ia == 0 else rb).block(l)
            return blk[la, lb]
        if ia < ib:
            return sol.block(l)[la, lb]
        return sol.block(-l)[lb, la]

    for r in range(k + 1):
        for s in range(k + 1):
            for ga in range(d):
                for gb in range(d):
                    assert_allclose(
                        rtm[r * d + ga, s * d + gb], expected(r, s, ga, gb), atol=1e-12
                    )


def test_assemble_requires_all_pairs():
    rng = np.random.default_rng(9)
    subs = [random_subprocess_corr(rng, 1, 1) for _ in range(3)]
    part = Partition(sets=((0,), (1,), (2,)), d=3)
    sol01 = solve_cross_pair(
        subs[0], subs[1], (1, 1), CrossFixedBlock(pair=(0, 1), lag=0, value=[[0.1]])
    )
    with pytest.raises(ValueError):
        assemble_full_R(part, subs, [sol01])


# ------------------------------------------------------- closure verification


@pytest.mark.parametrize(
    "labels,expected_holds",
    [((1, 1), (1, 1)), ((2, 2), (2, 2)), ((1, 2), (1, 2)), ((2, 1), (2, 1))],
)
def test_verify_closure_identifies_condition(labels, expected_holds):
    part, ri, rj, sol, rp = build_two_sub_model(labels)
    rtm = reorder_time_major(rp, part, 2)
    report = verify_closure(rtm, part, 2)
    assert report.all_pass
    assert tuple(s.holds for s in report.subs) == expected_holds
    text = str(report)
    assert "S={1}" in text and "S={2}" in text


def test_verify_closure_rejects_non_pd():
    part = Partition(sets=((0,), (1,)), d=2)
    with pytest.raises(np.linalg.LinAlgError):
        verify_closure(np.ones((4, 4)), part, 1)


def test_closure_fails_for_nonclosed_var():
    # VAR(1) with A = [[0, 1/2], [0, 1/2]]: the first variable alone is not
    # an AR(1) (its lag-2 partial autocorrelation is 1/21), the second is.
    a = np.array([[0.0, 0.5], [0.0, 0.5]])
    var = VarRepresentation(phi=(a,), sigma=np.eye(2))
    gam = implied_autocov(var, 2)
    scale = 1.0 / np.sqrt(np.diag(gam[0]))
    corr = [g * np.outer(scale, scale) for g in gam]
    g1 = [corr[l][0, 0] for l in range(3)]
    assert_allclose(partial_autocorr_oracle(g1, 2), 1.0 / 21.0, atol=1e-12)

    d = 2
    rtm = np.block([[corr[abs(s - r)] if s >= r else corr[abs(s - r)].T for s in range(2)] for r in range(2)])
    part = Partition(sets=((0,), (1,)), d=d)
    report = verify_closure(rtm, part, 1)
    assert not report.all_pass
    assert report.subs[0].holds is None
    assert report.subs[0].markov_residual > 1e-3
    assert report.subs[1].holds == 1
    assert "fails" in str(report) or "none" in str(report).lower()


def test_coefficient_block_zeros():
    # label-1 sub-processes must not load on the others' lags
    part = Partition(sets=((0,), (1,)), d=2)
    a_bad = np.array([[0.0, 0.5], [0.0, 0.5]])
    var_bad = VarRepresentation(phi=(a_bad,), sigma=np.eye(2))
    assert not coefficient_block_zeros((1, 1), var_bad, part)
    assert coefficient_block_zeros((2, 1), var_bad, part)  # only sub 2 checked, its row is diagonal

    part2, ri, rj, sol, rp = build_two_sub_model((1, 1))
    rtm = reorder_time_major(rp, part2, 2)
    d = 2
    slices = [rtm[:d, l * d:(l + 1) * d] for l in range(3)]
    var = durbin_levinson(slices, 2)
    assert coefficient_block_zeros((1, 1), var, part2)


def test_verify_closure_markov_residual_zero_for_true_order():
    # genuinely Markov-k sub-processes (here an AR(1) and an AR(2) at k = 2)
    # have a vanishing conditional link between Z_t and Z_{t-k-1}
    ri = scalar_sub([1.0, 0.7, 0.49])
    rj = scalar_sub([1.0, 0.6, 0.5])
    lag = fixed_lag_for_labels((1, 1), 2)
    sol = solve_cross_pair(ri, rj, (1, 1), CrossFixedBlock(pair=(0, 1), lag=lag, value=[[0.3]]))
    part = Partition(sets=((0,), (1,)), d=2)
    rtm = reorder_time_major(assemble_full_R(part, [ri, rj], [sol]), part, 2)
    report = verify_closure(rtm, part, 2)
    assert report.subs[0].markov_residual < 1e-10
    assert report.subs[1].markov_residual < 1e-10
    assert report.subs[0].holds == 1
