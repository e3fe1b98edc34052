"""Cyclic Jacobi eigensolver, numpy fallback for the compiled ``_jacobi`` core.

Both implementations perform the same rotation sequence, so results agree to
rounding.
"""
import math

import numpy as np


def _off_norm(a):
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(a_in, rtol=1e-14, max_sweeps=100):
    """Return ``(w, V, sweeps)`` with ``a_in = V diag(w) V'``, unsorted."""
    a = np.array(a_in, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    sweep = 0
    while sweep < max_sweeps:
        if _off_norm(a) <= rtol * scale:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                diff = aqq - app
                if abs(diff) > 1e150 * abs(apq):
                    theta = math.copysign(math.inf, diff * apq)
                else:
                    theta = diff / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, :] = a[:, p]
                a[q, :] = a[:, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweep
