"""Pure-Python CI-test kernels.  Same contract as the compiled ``_ckernels``."""

import math

BACKEND = "python"

_SQRT2 = math.sqrt(2.0)


def partial_corr(corr, idx, tol):
    """Partial correlation of idx[0], idx[1] given idx[2:] on a correlation matrix.

    Eliminates the conditioning block, then x, then y (LDL^T without square
    roots).  Returns ``(r, 0)`` or ``(nan, 1)`` when a pivot falls below
    ``tol``, i.e. the submatrix is numerically singular.
    """
    q = len(idx)
    order = list(idx[2:]) + [idx[0], idx[1]]
    a = [[float(corr[i][j]) for j in order] for i in order]
    for k in range(q):
        piv = a[k][k]
        if piv < tol:
            return math.nan, 1
        if k >= q - 2:
            continue
        row_k = a[k]
        for i in range(k + 1, q):
            f = a[i][k] / piv
            if f == 0.0:
                continue
            row_i = a[i]
            for j in range(k + 1, i + 1):
                row_i[j] -= f * row_k[j]
            for j in range(k + 1, i + 1):
                a[j][i] = row_i[j]
    sxx = a[q - 2][q - 2]
    syy = a[q - 1][q - 1]
    sxy = a[q - 1][q - 2]
    if syy - sxy * sxy / sxx < tol:
        return math.nan, 1
    return sxy / math.sqrt(sxx * syy), 0


def fisher_z(r, n, k):
    """Two-sided Fisher z test of a (partial) correlation from n rows, k conditioners."""
    z = 0.5 * math.log((1.0 + r) / (1.0 - r))
    stat = math.sqrt(n - k - 3) * abs(z)
    return stat, math.erfc(stat / _SQRT2)
