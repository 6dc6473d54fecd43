"""Independent reference solvers used only by the test suite."""
import numpy as np


def dense_qp_nnls(H, y, lam, iters=20000, tol=1e-13):
    """Accelerated projected gradient on 0.5 p'Qp + f'p, p >= 0, with
    Q = 2(H'H + lam I), f = -2 H'y. Dense, no band structure."""
    n = H.shape[1]
    Q = 2.0 * (H.T @ H + lam * np.eye(n))
    f = -2.0 * H.T @ y
    step = 1.0 / np.linalg.eigvalsh(Q)[-1]
    p = np.zeros(n)
    z = p.copy()
    t = 1.0
    obj = lambda v: 0.5 * v @ Q @ v + f @ v
    last = obj(p)
    for k in range(iters):
        p_new = np.maximum(z - step * (Q @ z + f), 0.0)
        if obj(p_new) > last:  # adaptive restart
            t = 1.0
            z = p.copy()
            continue
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        z = p_new + ((t - 1) / t_new) * (p_new - p)
        p, t = p_new, t_new
        cur = obj(p)
        if abs(last - cur) <= tol * max(1.0, abs(cur)) and k > 50:
            last = cur
            break
        last = cur
    return p


def ridge_objective_dense(H, y, lam, p):
    r = H @ p - y
    return float(r @ r + lam * p @ p)


def lag_oracle(x, m):
    n = x.size
    V = np.empty((n - m, m + 1))
    for r in range(n - m):
        for j in range(m + 1):
            V[r, j] = x[r + j]
    return V


def mdl_oracle(x, y, m, lam=0.01, floor=1e-8):
    """Dense projector, explicit inverse, explicit sums."""
    n = y.size
    V = lag_oracle(x, m)
    G = V.T @ V
    Ginv = np.linalg.inv(G)
    rc = 1.0 / (np.abs(G).sum(axis=0).max() * np.abs(Ginv).sum(axis=0).max())
    if rc < floor:
        Ginv = np.linalg.inv(G + lam * np.eye(m + 1))
    P = V @ Ginv @ V.T
    eps = y[m:] - P @ y[m:]
    sigma2 = sum(e * e for e in eps) / n
    return n * np.log(sigma2) + (m + 1) * np.log(n - m)
