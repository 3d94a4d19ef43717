"""Margin-closed cross-dependence construction for Gaussian VAR(k) models.

A model is specified by a partition of the d variables into sub-processes, a
correlation structure per sub-process, a condition label in {1, 2} per
sub-process, and one fixed cross block per pair.  This module solves for the
remaining cross-correlation blocks so that every sub-process of the assembled
joint process is itself a VAR(k), assembles the full correlation matrix, and
verifies the closure property on any given matrix.

Lag convention: ``Sigma_{ij,l} = corr(Z_{S_i,t}, Z_{S_j,t-l})`` so that
``Sigma_{ji,l} = Sigma_{ij,-l}.T``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .linalg import (
    PD_TOL,
    commutation_matrix,
    exchange_matrix,
    gaussian_condition,
    is_positive_definite,
    kron,
    unvec,
    vec,
)
from .varprocess import durbin_levinson

# Condition number above which the stacked cross-block system is treated as
# degenerate rather than solved.
CONDITION_LIMIT = 1e12

__all__ = [
    "Partition",
    "SubprocessCorr",
    "CrossFixedBlock",
    "CrossSolution",
    "DegenerateCrossPair",
    "fixed_lag_for_labels",
    "forward_predictors",
    "backward_predictors",
    "build_G",
    "build_H",
    "solve_cross_pair",
    "cross_pair_residual",
    "assemble_full_R",
    "reorder_time_major",
    "SubprocessClosure",
    "ClosureReport",
    "verify_closure",
    "coefficient_block_zeros",
]


class DegenerateCrossPair(np.linalg.LinAlgError):
    """Stacked cross-block system is numerically singular for a pair."""

    def __init__(self, pair, cond):
        self.pair = pair
        super().__init__(
            "cross-block system for sub-process pair %s is degenerate "
            "(condition number %.3g exceeds %.3g)" % (pair, cond, CONDITION_LIMIT)
        )


@dataclass(frozen=True)
class Partition:
    """Ordered disjoint index sets S_1..S_n covering 0..d-1."""

    sets: tuple
    d: int

    def __post_init__(self):
        sets = tuple(tuple(int(v) for v in s) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        seen = []
        for s in sets:
            if len(s) == 0:
                raise ValueError("empty sub-process index set")
            if list(s) != sorted(set(s)):
                raise ValueError("indices within a sub-process must be strictly increasing")
            seen.extend(s)
        if sorted(seen) != list(range(self.d)):
            raise ValueError("partition must cover 0..%d exactly once" % (self.d - 1))

    @property
    def n(self):
        return len(self.sets)

    def complement(self, i):
        own = set(self.sets[i])
        return tuple(v for v in range(self.d) if v not in own)


@dataclass(frozen=True)
class SubprocessCorr:
    """Correlation blocks Sigma_{ii,0}..Sigma_{ii,k} of one sub-process."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(np.atleast_2d(np.asarray(b, dtype=float)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ValueError("need at least the lag-0 block")
        d = blocks[0].shape[0]
        for b in blocks:
            if b.shape != (d, d):
                raise ValueError("all lag blocks must be %d x %d" % (d, d))
        b0 = blocks[0]
        if np.max(np.abs(b0 - b0.T)) > 1e-8:
            raise ValueError("lag-0 block must be symmetric")
        if np.max(np.abs(np.diag(b0) - 1.0)) > 1e-8:
            raise ValueError("lag-0 block must have unit diagonal (correlation scale)")

    @property
    def dim(self):
        return self.blocks[0].shape[0]

    @property
    def order(self):
        return len(self.blocks) - 1

    def block(self, l):
        """Sigma_{ii,l} for -k <= l <= k (negative lags by transpose)."""
        if abs(l) > self.order:
            raise ValueError("lag %d beyond order %d" % (l, self.order))
        return self.blocks[l] if l >= 0 else self.blocks[-l].T

    def toeplitz(self):
        """(k+1)d x (k+1)d block Toeplitz correlation matrix of k+1 slices."""
        k1 = self.order + 1
        return np.block([[self.block(s - r) for s in range(k1)] for r in range(k1)])

    def is_pd(self, tol=PD_TOL):
        return is_positive_definite(self.toeplitz(), tol)


def fixed_lag_for_labels(labels, k):
    """Lag of the pair's fixed cross block: 0, -k, or +k depending on the labels."""
    ci, cj = labels
    if ci not in (1, 2) or cj not in (1, 2):
        raise ValueError("condition labels must be 1 or 2, got %s" % (labels,))
    if ci == cj:
        return 0
    return -k if (ci, cj) == (1, 2) else k


@dataclass(frozen=True)
class CrossFixedBlock:
    """The one free cross-dependence parameter of a pair (i, j) with i < j."""

    pair: tuple
    lag: int
    value: np.ndarray

    def __post_init__(self):
        i, j = self.pair
        if not i < j:
            raise ValueError("pair must satisfy i < j, got %s" % (self.pair,))
        object.__setattr__(self, "pair", (int(i), int(j)))
        object.__setattr__(self, "value", np.atleast_2d(np.asarray(self.value, dtype=float)))


@dataclass(frozen=True)
class CrossSolution:
    """All 2k+1 cross blocks Sigma_{ij,-k}..Sigma_{ij,k} of a pair (i, j)."""

    pair: tuple
    order: int
    blocks: tuple  # index l + k holds Sigma_{ij,l}

    def block(self, l):
        if abs(l) > self.order:
            raise ValueError("lag %d beyond order %d" % (l, self.order))
        return self.blocks[l + self.order]


def _gram(r):
    """Correlation matrix of the stacked window (Z_{t-1}, ..., Z_{t-k})."""
    k = r.order
    return np.block([[r.block(c - row) for c in range(k)] for row in range(k)])


def forward_predictors(r):
    """Coefficients Phi_{p,1..k} of the projection of Z_t on Z_{t-1}..Z_{t-k}."""
    k, d = r.order, r.dim
    if k == 0:
        return []
    row = np.hstack([r.block(l) for l in range(1, k + 1)])
    try:
        stacked = sla.solve(_gram(r), row.T, assume_a="pos").T
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise np.linalg.LinAlgError("singular predictor Gram matrix: %s" % exc) from exc
    return [stacked[:, m * d:(m + 1) * d] for m in range(k)]


def backward_predictors(r):
    """Coefficients Psi_{p,1..k} of the projection of Z_{t-k-1} on Z_{t-1}..Z_{t-k}.

    Psi_{p,j} multiplies Z_{t-j}, the same indexing as the forward list.  The
    covariance row is (Sigma_{pp,-k}, ..., Sigma_{pp,-1}) since
    corr(Z_{t-k-1}, Z_{t-j}) = Sigma_{pp,j-k-1}.
    """
    k, d = r.order, r.dim
    if k == 0:
        return []
    row = np.hstack([r.block(l) for l in range(-k, 0)])
    try:
        stacked = sla.solve(_gram(r), row.T, assume_a="pos").T
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise np.linalg.LinAlgError("singular predictor Gram matrix: %s" % exc) from exc
    return [stacked[:, m * d:(m + 1) * d] for m in range(k)]


def build_G(pred, k, d_p):
    """Banded block matrix of the forward-prediction orthogonality conditions.

    k x (2k+1) blocks of size d_p; row r carries Phi_{p,k}, ..., Phi_{p,1} in
    block columns r+1..r+k followed by -I in column r+k+1.  Row r of G @ D_ij
    equals sum_m Phi_{p,m} Sigma_{ij,r+1-m} - Sigma_{ij,r+1}.
    """
    phis = list(pred)
    if len(phis) != k:
        raise ValueError("expected %d forward coefficient blocks, got %d" % (k, len(phis)))
    out = np.zeros((k * d_p, (2 * k + 1) * d_p))
    eye = np.eye(d_p)
    for r in range(k):
        for s in range(k):
            out[r * d_p:(r + 1) * d_p, (r + 1 + s) * d_p:(r + 2 + s) * d_p] = phis[k - 1 - s]
        c = r + k + 1
        out[r * d_p:(r + 1) * d_p, c * d_p:(c + 1) * d_p] = -eye
    return out


def build_H(pred, k, d_p):
    """Banded block matrix of the backward-prediction orthogonality conditions.

    Mirrors :func:`build_G` with -I leading each row: row r carries -I in
    block column r, then Psi_{p,k}, ..., Psi_{p,1} in columns r+1..r+k.
    """
    psis = list(pred)
    if len(psis) != k:
        raise ValueError("expected %d backward coefficient blocks, got %d" % (k, len(psis)))
    out = np.zeros((k * d_p, (2 * k + 1) * d_p))
    eye = np.eye(d_p)
    for r in range(k):
        out[r * d_p:(r + 1) * d_p, r * d_p:(r + 1) * d_p] = -eye
        for s in range(k):
            out[r * d_p:(r + 1) * d_p, (r + 1 + s) * d_p:(r + 2 + s) * d_p] = psis[k - 1 - s]
    return out


def _condition_matrix(r, label):
    """G or H matrix of one sub-process, per its condition label."""
    if label == 1:
        return build_G(forward_predictors(r), r.order, r.dim)
    return build_H(backward_predictors(r), r.order, r.dim)


def solve_cross_pair(ri, rj, labels, fixed):
    """Solve the cross blocks Sigma_{ij,-k}..Sigma_{ij,k} of one pair.

    Parameters
    ----------
    ri, rj : SubprocessCorr
        Sub-process structures of equal order k.
    labels : (int, int)
        Condition labels (c_i, c_j).
    fixed : CrossFixedBlock
        The pair's fixed block; its lag must match the labels (0 for equal
        labels, -k for (1, 2), +k for (2, 1)).

    For mixed labels all non-fixed blocks are identically zero and are set,
    not solved.  For equal labels the remaining 2k blocks solve the stacked
    vec-form linear system built from the banded condition matrices.
    """
    k = ri.order
    if rj.order != k:
        raise ValueError("sub-process orders differ: %d vs %d" % (k, rj.order))
    di, dj = ri.dim, rj.dim
    want = fixed_lag_for_labels(labels, k)
    if fixed.lag != want:
        raise ValueError(
            "labels %s fix the lag-%d block, got a lag-%d block" % (labels, want, fixed.lag)
        )
    if fixed.value.shape != (di, dj):
        raise ValueError(
            "fixed block shape %s, expected (%d, %d)" % (fixed.value.shape, di, dj)
        )

    blocks = [None] * (2 * k + 1)
    if labels[0] != labels[1]:
        # Conditions leave every other block identically zero.
        for l in range(-k, k + 1):
            blocks[l + k] = np.zeros((di, dj))
        blocks[want + k] = fixed.value.copy()
        return CrossSolution(pair=fixed.pair, order=k, blocks=tuple(blocks))

    a_i = _condition_matrix(ri, labels[0])
    a_j = _condition_matrix(rj, labels[1])
    L = kron(exchange_matrix(2 * k + 1), np.eye(dj))  # reverses block columns
    b_j = a_j @ L
    K = commutation_matrix(di, dj)

    mid = slice(k * di, (k + 1) * di)
    mid_j = slice(k * dj, (k + 1) * dj)
    rest_i = np.delete(a_i, np.arange(k * di, (k + 1) * di), axis=1)
    rest_j = np.delete(b_j, np.arange(k * dj, (k + 1) * dj), axis=1)

    M = np.vstack([
        kron(rest_i, np.eye(dj)) @ kron(np.eye(2 * k), K),
        kron(rest_j, np.eye(di)),
    ])
    N = np.vstack([
        kron(a_i[:, mid], np.eye(dj)) @ K,
        kron(b_j[:, mid_j], np.eye(di)),
    ])
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise DegenerateCrossPair(fixed.pair, cond)
    x = np.linalg.solve(M, -N @ vec(fixed.value))

    step = di * dj
    lags = list(range(-k, 0)) + list(range(1, k + 1))
    for m, l in enumerate(lags):
        blocks[l + k] = unvec(x[m * step:(m + 1) * step], di, dj)
    blocks[k] = fixed.value.copy()
    return CrossSolution(pair=fixed.pair, order=k, blocks=tuple(blocks))


def cross_pair_residual(ri, rj, labels, sol):
    """Max-abs residual of the two selected condition systems at a solution.

    Evaluates the banded systems directly: A_i @ D_ij and A_j @ D_ji with
    D_ij the vertical stack of Sigma_{ij,-k}..Sigma_{ij,k}.
    """
    k = ri.order
    d_ij = np.vstack([sol.block(l) for l in range(-k, k + 1)])
    d_ji = np.vstack([sol.block(-l).T for l in range(-k, k + 1)])
    res_i = _condition_matrix(ri, labels[0]) @ d_ij
    res_j = _condition_matrix(rj, labels[1]) @ d_ji
    return max(np.max(np.abs(res_i)), np.max(np.abs(res_j)))


def assemble_full_R(partition, subs, crosses):
    """Assemble the (k+1)d correlation matrix in sub-process-major order.

    Diagonal blocks are the sub-process block Toeplitz matrices; block (r, s)
    of the off-diagonal R_{S_i,S_j} is Sigma_{ij,s-r}.
    """
    n = partition.n
    if len(subs) != n:
        raise ValueError("expected %d sub-process structures, got %d" % (n, len(subs)))
    by_pair = {}
    for c in crosses:
        by_pair[c.pair] = c
    k = subs[0].order
    for i, (s, r) in enumerate(zip(partition.sets, subs)):
        if r.dim != len(s):
            raise ValueError("sub-process %d has dim %d but %d indices" % (i, r.dim, len(s)))
        if r.order != k:
            raise ValueError("sub-process orders differ")

    k1 = k + 1
    sizes = [k1 * r.dim for r in subs]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    out = np.zeros((offsets[-1], offsets[-1]))
    for i in range(n):
        oi = offsets[i]
        out[oi:oi + sizes[i], oi:oi + sizes[i]] = subs[i].toeplitz()
        for j in range(i + 1, n):
            if (i, j) not in by_pair:
                raise ValueError("missing cross solution for pair (%d, %d)" % (i, j))
            sol = by_pair[(i, j)]
            if sol.order != k:
                raise ValueError("cross solution order mismatch for pair (%d, %d)" % (i, j))
            oj = offsets[j]
            rij = np.block([[sol.block(s - r) for s in range(k1)] for r in range(k1)])
            out[oi:oi + sizes[i], oj:oj + sizes[j]] = rij
            out[oj:oj + sizes[j], oi:oi + sizes[i]] = rij.T
    return out


def reorder_time_major(r_partitioned, partition, k):
    """Permute a sub-process-major matrix to time-major order.

    Output rows/columns are ordered (Z_t, Z_{t-1}, ..., Z_{t-k}) with the d
    variables in natural order inside each slice; a symmetric permutation.
    """
    d = partition.d
    size = (k + 1) * d
    r_partitioned = np.asarray(r_partitioned, dtype=float)
    if r_partitioned.shape != (size, size):
        raise ValueError("matrix shape %s, expected (%d, %d)" % (r_partitioned.shape, size, size))
    idx = np.empty(size, dtype=int)
    base = 0
    for s in partition.sets:
        di = len(s)
        for r in range(k + 1):
            for a, v in enumerate(s):
                idx[r * d + v] = base + r * di + a
        base += (k + 1) * di
    return r_partitioned[np.ix_(idx, idx)]


@dataclass(frozen=True)
class SubprocessClosure:
    """Closure diagnostics for one sub-process."""

    indices: tuple
    cond1_residual: float
    cond2_residual: float
    markov_residual: float
    holds: object  # 1, 2, or None

    @property
    def passed(self):
        return self.holds is not None


@dataclass(frozen=True)
class ClosureReport:
    subs: tuple
    tol: float

    @property
    def all_pass(self):
        return all(s.passed for s in self.subs)

    def __str__(self):
        lines = []
        for s in self.subs:
            verdict = "condition %s holds" % s.holds if s.passed else "closure fails"
            lines.append(
                "S=%s: %s (cond1 %.3g, cond2 %.3g, markov %.3g)"
                % (
                    "{" + ",".join(str(v + 1) for v in s.indices) + "}",
                    verdict,
                    s.cond1_residual,
                    s.cond2_residual,
                    s.markov_residual,
                )
            )
        return "\n".join(lines)


def verify_closure(r, partition, k, tol=1e-8):
    """Check the two sufficient closure conditions on a time-major correlation matrix.

    The matrix is extended to k+2 time slices through the implied VAR
    autocovariances, then for each sub-process the conditional cross
    covariances of both conditions are evaluated at lag k+1:

    * condition 1: Z_{S_i,t} against the other sub-processes' intermediates,
      given the sub-process's own intermediates;
    * condition 2: the same with Z_{S_i,t-k-1} in place of Z_{S_i,t};
    * the Markov residual between Z_{S_i,t} and Z_{S_i,t-k-1} given the own
      intermediates (zero when the sub-process is Markov of order <= k).

    A sub-process passes when either condition's residual is below ``tol``.
    """
    d = partition.d
    r = np.asarray(r, dtype=float)
    if not is_positive_definite(r):
        raise np.linalg.LinAlgError("correlation matrix is not positive definite")
    slices = [r[:d, l * d:(l + 1) * d] for l in range(k + 1)]
    var = durbin_levinson(slices, k)

    def sl(l):
        return slices[l] if l >= 0 else slices[-l].T

    ext = sum((var.phi[m] @ sl(k - m) for m in range(k)), np.zeros((d, d)))
    slices.append(ext)
    k2 = k + 2
    big = np.block([[sl(s - row) for s in range(k2)] for row in range(k2)])

    reports = []
    for i, s in enumerate(partition.sets):
        own = list(s)
        other = list(partition.complement(i))
        a = [v for v in own]
        b = [(k + 1) * d + v for v in own]
        v_idx = [r_ * d + v for r_ in range(1, k + 1) for v in own]
        w_idx = [r_ * d + w for r_ in range(1, k + 1) for w in other]

        def cross_residual(head_a, head_b):
            if not head_b:
                return 0.0
            _, cc = gaussian_condition(big, head_a + head_b, v_idx)
            return float(np.max(np.abs(cc[: len(head_a), len(head_a):])))

        c1 = cross_residual(a, w_idx)
        c2 = cross_residual(b, w_idx)
        mk = cross_residual(a, b)
        holds = 1 if c1 < tol else (2 if c2 < tol else None)
        reports.append(
            SubprocessClosure(
                indices=tuple(own),
                cond1_residual=c1,
                cond2_residual=c2,
                markov_residual=mk,
                holds=holds,
            )
        )
    return ClosureReport(subs=tuple(reports), tol=tol)


def coefficient_block_zeros(labels, var, partition, tol=1e-8):
    """True iff every label-1 sub-process has zero coefficients on the others.

    For each S_i with c_i = 1, the blocks Phi_{l}[S_i, S_j] for j != i must
    vanish at every lag; label-2 sub-processes impose nothing (vacuous truth).
    """
    for i, s in enumerate(partition.sets):
        if labels[i] != 1:
            continue
        other = list(partition.complement(i))
        if not other:
            continue
        for p in var.phi:
            if np.max(np.abs(p[np.ix_(list(s), other)])) > tol:
                return False
    return True
