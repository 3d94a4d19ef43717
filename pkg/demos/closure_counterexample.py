#!/usr/bin/env python3
"""A VAR(1) process whose first coordinate is not itself an AR(1).

Margins of a stationary VAR are not automatically low-order autoregressions:
with coefficient matrix A = [[0, 0.5], [0, 0.5]] and identity innovation
covariance, the first coordinate carries dependence from arbitrarily far
back.  The script shows this two ways:

* the lag-2 partial autocorrelation of the first coordinate is 1/21 rather
  than zero, matching the closed form
  a12^2 a22^2 (1 - a22^2) / ((1 + a12^2 - a22^2)^2 - a12^4 a22^2);
* the closure check flags the sub-process {1}: neither sufficient condition
  holds and its Markov residual is far from zero, while {2} (an honest
  AR(1)) passes.
"""

import numpy as np

from mcvar import (
    Partition,
    VarRepresentation,
    durbin_levinson,
    implied_autocov,
    verify_closure,
)

A = np.array([[0.0, 0.5], [0.0, 0.5]])


def joint_correlation(k):
    """Time-major correlation matrix of (Z_t, ..., Z_{t-k}) for the VAR(1)."""
    var = VarRepresentation(phi=(A,), sigma=np.eye(2))
    acov = implied_autocov(var, k)
    scale = np.diag(1.0 / np.sqrt(np.diag(acov[0])))
    slices = [scale @ g @ scale for g in acov]

    def sl(l):
        return slices[l] if l >= 0 else slices[-l].T

    return np.block([[sl(s - r) for s in range(k + 1)] for r in range(k + 1)])


def margin_pacf(coordinate, lag):
    """Partial autocorrelation of one coordinate via scalar recursion."""
    var = VarRepresentation(phi=(A,), sigma=np.eye(2))
    acov = implied_autocov(var, lag)
    gammas = [g[coordinate, coordinate] for g in acov]
    blocks = [np.array([[g / gammas[0]]]) for g in gammas]
    return float(durbin_levinson(blocks, lag).phi[-1][0, 0])


def closed_form_pacf():
    a12, a22 = A[0, 1], A[1, 1]
    num = a12 ** 2 * a22 ** 2 * (1.0 - a22 ** 2)
    den = (1.0 + a12 ** 2 - a22 ** 2) ** 2 - a12 ** 4 * a22 ** 2
    return num / den


def main():
    print("VAR(1) coefficient matrix A =")
    print(A)
    print()

    pacf2 = margin_pacf(0, 2)
    print("first coordinate, lag-2 partial autocorrelation: %.10f" % pacf2)
    print("closed form a12^2 a22^2 (1-a22^2)/(...):          %.10f" % closed_form_pacf())
    print("exact value 1/21:                                 %.10f" % (1.0 / 21.0))
    print()
    print("Nonzero lag-2 partial autocorrelation means the first coordinate")
    print("is not an AR(1), so the partition ({1}, {2}) is not closed at k=1.")
    print()

    report = verify_closure(joint_correlation(1), Partition(sets=((0,), (1,)), d=2), 1)
    print("closure check at k=1:")
    print(report)


if __name__ == "__main__":
    main()
