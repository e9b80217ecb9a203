"""Right-preconditioned GMRES for matrix-free operators.

Written out rather than taken from scipy so the iteration count is exact: with
an exact inverse as preconditioner the method stops after a single step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GMRESResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    stagnated: bool = False


def gmres(apply_a, b, tol=1e-8, maxiter=200, precondition=None, x0=None, atol=0.0):
    """Solve ``A x = b``; converged when ``||b - A x|| <= max(tol ||b||, atol)``.

    ``apply_a`` and ``precondition`` act on arrays shaped like ``b``. The
    preconditioner ``M`` is applied on the right, so the monitored residual is the
    true residual of the unpreconditioned system.
    """
    shape = b.shape
    M = precondition if precondition is not None else (lambda v: v)
    x = np.zeros(shape) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_a(x) if x0 is not None else b.copy()
    beta = float(np.linalg.norm(r))
    target = max(tol * float(np.linalg.norm(b)), atol)
    if beta <= target or beta == 0.0:
        return GMRESResult(x, 0, beta, True)

    m = maxiter
    V = np.zeros((m + 1, r.size))
    H = np.zeros((m + 1, m))
    cs = np.zeros(m)
    sn = np.zeros(m)
    g = np.zeros(m + 1)
    g[0] = beta
    V[0] = r.ravel() / beta
    k = 0
    res = beta
    for j in range(m):
        w = apply_a(M(V[j].reshape(shape))).ravel()
        # modified Gram-Schmidt, one reorthogonalization pass
        for _ in range(2):
            for i in range(j + 1):
                hij = V[i] @ w
                H[i, j] += hij
                w -= hij * V[i]
        H[j + 1, j] = np.linalg.norm(w)
        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        denom = np.hypot(H[j, j], H[j + 1, j])
        if denom == 0.0:
            break
        cs[j] = H[j, j] / denom
        sn[j] = H[j + 1, j] / denom
        H[j, j] = denom
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        res = abs(g[j + 1])
        k = j + 1
        if res <= target:
            break
        hnext = np.linalg.norm(w)
        if hnext <= 1e-14 * beta:
            break
        V[j + 1] = w / hnext
    y = np.linalg.solve(np.triu(H[:k, :k]), g[:k]) if k else np.zeros(0)
    dx = M((V[:k].T @ y).reshape(shape))
    x = x + dx
    true_res = float(np.linalg.norm(b - apply_a(x)))
    converged = true_res <= target * (1 + 1e-6) or res <= target
    return GMRESResult(x, k, true_res, bool(converged), stagnated=not converged)
