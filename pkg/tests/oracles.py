"""Independent reference implementations used to freeze expected test values.

Everything here is written against the mathematical definitions with plain
numpy (explicit inverses, probing of affine maps, quadrature), deliberately
avoiding the package's own vec/Kronecker plumbing and conditional-density
decompositions.
"""

import numpy as np
from scipy import integrate, optimize


def _blk(blocks, l):
    return blocks[l] if l >= 0 else blocks[-l].T


def predictors_oracle(blocks):
    """Forward and backward prediction coefficients by explicit inverse.

    blocks: list of correlation blocks Sigma_0..Sigma_k.  Returns (fwd, bwd),
    element m-1 multiplying Z_{t-m} when predicting Z_t (forward) or
    Z_{t-k-1} (backward).
    """
    k = len(blocks) - 1
    d = blocks[0].shape[0]
    gram = np.block([[_blk(blocks, c - r) for c in range(k)] for r in range(k)])
    gi = np.linalg.inv(gram)
    fs = np.hstack([_blk(blocks, l) for l in range(1, k + 1)]) @ gi
    bs = np.hstack([_blk(blocks, l) for l in range(-k, 0)]) @ gi
    fwd = [fs[:, m * d:(m + 1) * d] for m in range(k)]
    bwd = [bs[:, m * d:(m + 1) * d] for m in range(k)]
    return fwd, bwd


def cross_condition_residuals(blocks_i, blocks_j, labels, cross):
    """Residual blocks of the selected closure conditions at a candidate.

    cross: dict lag -> Sigma_{ij,lag} for every lag in -k..k.  The i-side
    conditions constrain Sigma_{ij,r} (label 1) or Sigma_{ij,r-k-1} (label 2)
    for r = 1..k; the j-side conditions are the transposed analogues.
    """
    k = len(blocks_i) - 1
    fwd_i, bwd_i = predictors_oracle(blocks_i)
    fwd_j, bwd_j = predictors_oracle(blocks_j)

    def s(l):
        return cross[l]

    res = []
    for r in range(1, k + 1):
        if labels[0] == 1:
            res.append(s(r) - sum(fwd_i[m - 1] @ s(r - m) for m in range(1, k + 1)))
        else:
            res.append(s(r - k - 1) - sum(bwd_i[m - 1] @ s(r - m) for m in range(1, k + 1)))
        if labels[1] == 1:
            res.append(s(-r) - sum(s(m - r) @ fwd_j[m - 1].T for m in range(1, k + 1)))
        else:
            res.append(s(k + 1 - r) - sum(s(m - r) @ bwd_j[m - 1].T for m in range(1, k + 1)))
    return res


def dense_cross_solve(blocks_i, blocks_j, labels, fixed_lag, fixed_value):
    """Solve the closure conditions by probing the affine residual map.

    Independent of any banded-matrix or vec/Kronecker construction: the
    unknown blocks are probed entry by entry, the resulting dense linear
    system is solved directly.  Returns dict lag -> block for lag in -k..k.
    """
    k = len(blocks_i) - 1
    di = blocks_i[0].shape[0]
    dj = blocks_j[0].shape[0]
    free = [l for l in range(-k, k + 1) if l != fixed_lag]
    step = di * dj
    n = len(free) * step

    def unpack(x):
        cross = {fixed_lag: np.asarray(fixed_value, dtype=float)}
        for m, l in enumerate(free):
            cross[l] = x[m * step:(m + 1) * step].reshape(di, dj)
        return cross

    def resid(x):
        res = cross_condition_residuals(blocks_i, blocks_j, labels, unpack(x))
        return np.concatenate([r.ravel() for r in res])

    r0 = resid(np.zeros(n))
    cols = np.empty((r0.size, n))
    for m in range(n):
        e = np.zeros(n)
        e[m] = 1.0
        cols[:, m] = resid(e) - r0
    # Mixed-label systems can be singular when the two coefficient spectra
    # share an eigenvalue; the residual at zero is exactly zero there, so the
    # minimum-norm solution is the intended all-zero cross-dependence.
    x = np.linalg.lstsq(cols, -r0, rcond=None)[0]
    return unpack(x)


def partial_autocorr_oracle(gammas, lag):
    """Partial autocorrelation at a lag from a scalar autocovariance sequence.

    Conditional correlation of (X_t, X_{t-lag}) given the strictly
    intermediate values, computed by explicit inversion.
    """
    n = lag + 1
    big = np.array([[gammas[abs(r - c)] for c in range(n)] for r in range(n)])
    head = [0, lag]
    mid = list(range(1, lag))
    if not mid:
        return big[0, lag] / big[0, 0]
    s_hh = big[np.ix_(head, head)]
    s_hm = big[np.ix_(head, mid)]
    s_mm = big[np.ix_(mid, mid)]
    cond = s_hh - s_hm @ np.linalg.inv(s_mm) @ s_hm.T
    return cond[0, 1] / np.sqrt(cond[0, 0] * cond[1, 1])


def skewt_cdf_quadrature(x, pdf, center=0.0):
    """Distribution function by adaptive quadrature of a density.

    Integrates from whichever tail is closer to ``center`` so the adaptive
    rule never loses the density peak far from a finite endpoint.
    """
    if x <= center:
        val, _ = integrate.quad(pdf, -np.inf, x, limit=200)
        return val
    upper, _ = integrate.quad(pdf, x, np.inf, limit=200)
    return 1.0 - upper


def skewt_quantile_root(u, pdf, lo=-1e6, hi=1e6):
    """Quantile by root finding on the quadrature distribution function."""
    return optimize.brentq(lambda s: skewt_cdf_quadrature(s, pdf) - u, lo, hi, xtol=1e-12)


def copula_loglik_oracle(data, margins, r_tm, k, pit):
    """Joint Gaussian-copula log density through one big T*d covariance.

    No sequential conditioning: the latent scores are scored against the
    block Toeplitz correlation of the whole sample, with lag blocks beyond k
    extended through the autoregression implied by the first k+1 slices.
    ``pit`` maps (x_row, margin) to normal scores so the same margin
    transform is used by both routes.
    """
    data = np.asarray(data, dtype=float)
    d, T = data.shape
    slices = [np.asarray(r_tm[:d, l * d:(l + 1) * d], dtype=float) for l in range(k + 1)]
    gram = np.block([[_blk(slices, c - r) for c in range(k)] for r in range(k)])
    stacked = np.hstack([_blk(slices, l) for l in range(1, k + 1)]) @ np.linalg.inv(gram)
    phis = [stacked[:, m * d:(m + 1) * d] for m in range(k)]
    while len(slices) < T:
        l = len(slices)
        slices.append(sum(phis[m] @ _blk(slices, l - 1 - m) for m in range(k)))

    big = np.block([[_blk(slices, a - b) for b in range(T)] for a in range(T)])
    z = np.vstack([pit(data[i], margins[i]) for i in range(d)])
    zvec = z.T.ravel()  # time-increasing stacking matches block (a, b) = Sigma_{a-b}

    sign, logdet = np.linalg.slogdet(big)
    assert sign > 0, "oracle covariance must be positive definite"
    quad = zvec @ np.linalg.inv(big) @ zvec
    ll = -0.5 * (T * d * np.log(2.0 * np.pi) + logdet + quad)

    from mcvar.margins import logpdf as margin_logpdf
    for i in range(d):
        ll += float(np.sum(margin_logpdf(data[i], margins[i])))
        ll += 0.5 * float(np.sum(np.log(2.0 * np.pi) + z[i] * z[i]))
    return ll


def random_stationary_var(rng, d, k, radius=0.6):
    """Random stationary VAR(k): scaled random coefficients, random SPD innovation."""
    from mcvar.varprocess import VarRepresentation

    while True:
        phis = [rng.standard_normal((d, d)) * 0.5 for _ in range(k)]
        comp = np.zeros((d * k, d * k))
        comp[:d] = np.hstack(phis)
        if k > 1:
            comp[d:, :-d] = np.eye(d * (k - 1))
        sr = np.max(np.abs(np.linalg.eigvals(comp)))
        if sr < 1e-6:
            continue
        scale = radius / sr
        phis = [p * scale ** (m + 1) for m, p in enumerate(phis)]
        a = rng.standard_normal((d, d))
        sigma = a @ a.T + 0.3 * np.eye(d)
        return VarRepresentation(phi=tuple(phis), sigma=sigma)


def random_subprocess_corr(rng, d, k, radius=0.6):
    """Random valid correlation blocks Sigma_0..Sigma_k of a stationary VAR."""
    from mcvar.closure import SubprocessCorr
    from mcvar.varprocess import implied_autocov

    var = random_stationary_var(rng, d, k, radius)
    gams = implied_autocov(var, k)
    scale = 1.0 / np.sqrt(np.diag(gams[0]))
    blocks = []
    for l, g in enumerate(gams):
        b = g * np.outer(scale, scale)
        if l == 0:
            b = 0.5 * (b + b.T)
            np.fill_diagonal(b, 1.0)
        blocks.append(b)
    return SubprocessCorr(blocks=tuple(blocks))
