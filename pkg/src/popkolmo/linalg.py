"""Dense eigenvalue and elimination kernels used by the spectral analysis."""

from __future__ import annotations

import math

import numpy as np

from .errors import NoConvergence

DEFLATION_TOL = 1e-14
ITERATIONS_PER_EIGENVALUE = 60


def hessenberg(a) -> np.ndarray:
    """Reduce ``a`` to upper Hessenberg form by Householder reflections."""
    h = np.array(a, dtype=float, copy=True)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def hessenberg_eigenvalues(h) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.

    Works in real arithmetic; complex eigenvalues come out as conjugate
    pairs. A subdiagonal entry is set to zero once it drops below
    ``1e-14 * (|h_kk| + |h_{k+1,k+1}|)``.
    """
    a = np.array(h, dtype=float, copy=True)
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    if n == 0:
        return wr.astype(complex)
    anorm = float(np.sum(np.abs(np.triu(a, -1))))
    budget = ITERATIONS_PER_EIGENVALUE * n
    total = 0
    nn = n - 1
    shift = 0.0
    while nn >= 0:
        its = 0
        while True:
            # look for a single small subdiagonal element
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= DEFLATION_TOL * s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + shift
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += shift
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = z
                    wi[nn] = -z
                nn -= 2
                break
            if total >= budget:
                raise NoConvergence(f"QR iteration exceeded {budget} sweeps", iterations=total)
            if its in (10, 20):
                # exceptional shift
                shift += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            total += 1
            # find two consecutive small subdiagonal elements
            m = nn - 2
            while True:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= DEFLATION_TOL * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            # double-shift QR sweep on rows/columns l..nn
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k != nn - 1:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                for i in range(l, min(nn, k + 3) + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k != nn - 1:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p
    return wr + 1j * wi


def eigenvalues(a) -> np.ndarray:
    """All eigenvalues of a real square matrix, with algebraic multiplicity."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return hessenberg_eigenvalues(hessenberg(a))


def row_echelon(a, tol: float):
    """Gaussian elimination with full (row and column) pivoting.

    Returns ``(r, pivot_columns)`` where ``r`` is the reduced row echelon
    form. A pivot smaller than ``tol`` ends the elimination.
    """
    r = np.array(a, dtype=float, copy=True)
    rows, cols = r.shape
    pivots = []
    row = 0
    free = list(range(cols))
    while row < rows and free:
        sub = np.abs(r[row:, free])
        flat = int(np.argmax(sub))
        pr, pc = divmod(flat, len(free))
        if sub[pr, pc] <= tol:
            break
        col = free.pop(pc)
        pr += row
        r[[row, pr]] = r[[pr, row]]
        r[row] /= r[row, col]
        for i in range(rows):
            if i != row and r[i, col] != 0.0:
                r[i] -= r[i, col] * r[row]
        pivots.append(col)
        row += 1
    r[row:] = 0.0
    return r, pivots


def elimination_rank(a, tol: float | None = None) -> int:
    a = np.asarray(a, dtype=float)
    if tol is None:
        tol = 1e-10 * max(1.0, float(np.max(np.abs(a), initial=0.0)))
    return len(row_echelon(a, tol)[1])


def nullspace(a, tol: float | None = None) -> np.ndarray:
    """Kernel basis (as columns) read off the reduced row echelon form."""
    a = np.asarray(a, dtype=float)
    if tol is None:
        tol = 1e-10 * max(1.0, float(np.max(np.abs(a), initial=0.0)))
    r, pivots = row_echelon(a, tol)
    cols = a.shape[1]
    free = [j for j in range(cols) if j not in pivots]
    basis = np.zeros((cols, len(free)))
    for k, f in enumerate(free):
        basis[f, k] = 1.0
        for row, p in enumerate(pivots):
            basis[p, k] = -r[row, f]
    return basis


def stationary_vector(c) -> np.ndarray:
    """Kernel vector of an irreducible Kolmogorov matrix, summing to one.

    Grassmann-Taksar-Heyman state reduction: no subtractions occur, so
    the result is strictly positive and accurate componentwise.
    """
    q = np.array(c, dtype=float, copy=True).T  # q[i, j]: rate i -> j
    n = q.shape[0]
    for k in range(n - 1, 0, -1):
        s = q[k, :k].sum()
        if not s > 0.0:
            raise ValueError("matrix is not irreducible")
        q[:k, k] /= s
        q[:k, :k] += np.outer(q[:k, k], q[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ q[:k, k]
    return pi / pi.sum()
