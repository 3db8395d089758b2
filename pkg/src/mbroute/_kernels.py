"""Hot kernels for traversal times of extremal speed profiles.

Every extremal profile on an edge of length ``L`` is a pointwise min/max
composition of curves whose squared speed is affine in position:

    0  accelerate from v1         v^2 = v1^2 + 2 a x
    1  brake into v2              v^2 = v2^2 + 2 b (L - x)
    2  speed cap                  v^2 = vmax^2
    3  brake from v1              v^2 = v1^2 - 2 b x
    4  accelerate into v2         v^2 = v2^2 - 2 a (L - x)
    5  crawl floor                v^2 = vfloor^2

fastest: min(0, 1, 2)              (pointwise upper envelope of all profiles)
slowest: min(0, 1, 2, max(3, 4, 5)) (pointwise lower envelope above the floor)

Time over [lam, mu] is the sum of closed-form integrals of dx / v(x) between
the pairwise intersections of the curves. The jitted scalar loop and the
vectorised numpy batch compute the same thing; ``MBR_DISABLE_NUMBA`` picks.
"""
import numpy as np

from mbroute._jit import NUMBA_ENABLED, njit

FASTEST = 0
SLOWEST = 1

_PAIRS_I = np.array([i for i in range(6) for j in range(i + 1, 6)], dtype=np.int64)
_PAIRS_J = np.array([j for i in range(6) for j in range(i + 1, 6)], dtype=np.int64)


def _interval_time(mode, L, v1, v2, lam, mu, vmax, a, b, vf):
    if mu <= lam:
        return 0.0
    c0 = np.empty(6)
    c1 = np.empty(6)
    c0[0] = v1 * v1
    c1[0] = 2.0 * a
    c0[1] = v2 * v2 + 2.0 * b * L
    c1[1] = -2.0 * b
    c0[2] = vmax * vmax
    c1[2] = 0.0
    c0[3] = v1 * v1
    c1[3] = -2.0 * b
    c0[4] = v2 * v2 - 2.0 * a * L
    c1[4] = 2.0 * a
    c0[5] = vf * vf
    c1[5] = 0.0

    pts = np.empty(17)
    pts[0] = lam
    pts[1] = mu
    n = 2
    for i in range(6):
        for j in range(i + 1, 6):
            den = c1[i] - c1[j]
            if den != 0.0:
                x = (c0[j] - c0[i]) / den
                if lam < x < mu:
                    pts[n] = x
                    n += 1
    pts = np.sort(pts[:n])

    total = 0.0
    for s in range(n - 1):
        p = pts[s]
        q = pts[s + 1]
        if q <= p:
            continue
        m = 0.5 * (p + q)
        k = 0
        best = c0[0] + c1[0] * m
        for c in (1, 2):
            val = c0[c] + c1[c] * m
            if val < best:
                best = val
                k = c
        if mode == 1:
            inner = 3
            ival = c0[3] + c1[3] * m
            for c in (4, 5):
                val = c0[c] + c1[c] * m
                if val > ival:
                    ival = val
                    inner = c
            if ival < best:
                best = ival
                k = inner
        # slivers from rounded intersections touch zero speed; only a real span stalls
        if best <= 0.0 and q - p > 1e-9 * max(L, 1.0):
            return np.inf
        if c1[k] == 0.0:
            total += (q - p) / np.sqrt(c0[k])
        else:
            vq = np.sqrt(max(c0[k] + c1[k] * q, 0.0))
            vp = np.sqrt(max(c0[k] + c1[k] * p, 0.0))
            total += 2.0 * (vq - vp) / c1[k]
    return total


interval_time_py = _interval_time
interval_time_scalar = njit(_interval_time)


@njit
def _batch_jit(mode, L, v1, v2, lam, mu, vmax, a, b, vf):
    out = np.empty(L.shape[0])
    for i in range(L.shape[0]):
        out[i] = interval_time_scalar(mode, L[i], v1[i], v2[i], lam[i], mu[i], vmax[i], a[i], b[i], vf[i])
    return out


def _batch_numpy(mode, L, v1, v2, lam, mu, vmax, a, b, vf):
    n = L.shape[0]
    if n == 0:
        return np.empty(0)
    c0 = np.stack([v1 * v1, v2 * v2 + 2 * b * L, vmax * vmax, v1 * v1, v2 * v2 - 2 * a * L, vf * vf], axis=1)
    c1 = np.stack([2 * a, -2 * b, np.zeros(n), -2 * b, 2 * a, np.zeros(n)], axis=1)

    den = c1[:, _PAIRS_I] - c1[:, _PAIRS_J]
    with np.errstate(divide="ignore", invalid="ignore"):
        x = (c0[:, _PAIRS_J] - c0[:, _PAIRS_I]) / den
    inside = (den != 0) & (x > lam[:, None]) & (x < mu[:, None])
    x = np.where(inside, x, lam[:, None])
    pts = np.sort(np.concatenate([lam[:, None], mu[:, None], x], axis=1), axis=1)
    p, q = pts[:, :-1], pts[:, 1:]
    mid = 0.5 * (p + q)

    vals = c0[:, :, None] + c1[:, :, None] * mid[:, None, :]
    ceil_idx = np.argmin(vals[:, :3, :], axis=1)
    if mode == SLOWEST:
        floor_idx = 3 + np.argmax(vals[:, 3:, :], axis=1)
        ceil_val = np.take_along_axis(vals, ceil_idx[:, None, :], axis=1)[:, 0, :]
        floor_val = np.take_along_axis(vals, floor_idx[:, None, :], axis=1)[:, 0, :]
        k = np.where(floor_val < ceil_val, floor_idx, ceil_idx)
    else:
        k = ceil_idx
    ck0 = np.take_along_axis(c0, k, axis=1)
    ck1 = np.take_along_axis(c1, k, axis=1)
    active = q > p
    speed_sq = ck0 + ck1 * mid
    span = (q - p) > 1e-9 * np.maximum(L, 1.0)[:, None]
    stalled = np.any(active & span & (speed_sq <= 0), axis=1)

    flat = ck1 == 0
    safe1 = np.where(flat, 1.0, ck1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_flat = (q - p) / np.sqrt(np.where(flat, ck0, 1.0))
        vq = np.sqrt(np.maximum(ck0 + ck1 * q, 0.0))
        vp = np.sqrt(np.maximum(ck0 + ck1 * p, 0.0))
        t_curve = 2.0 * (vq - vp) / safe1
    seg = np.where(flat, t_flat, t_curve)
    seg = np.where(active, seg, 0.0)
    total = seg.sum(axis=1)
    total[stalled] = np.inf
    return total


def interval_times(mode, L, v1, v2, lam, mu, vmax, a, b, vf):
    """Batched time over ``[lam, mu]``; all array arguments share one shape."""
    args = [np.ascontiguousarray(np.broadcast_to(np.asarray(z, dtype=np.float64), np.shape(L))).ravel()
            for z in (L, v1, v2, lam, mu, vmax, a, b, vf)]
    if NUMBA_ENABLED:
        return _batch_jit(int(mode), *args)
    return _batch_numpy(int(mode), *args)


def interval_time(mode, L, v1, v2, lam, mu, vmax, a, b, vf):
    if NUMBA_ENABLED:
        return float(interval_time_scalar(int(mode), float(L), float(v1), float(v2), float(lam), float(mu),
                                          float(vmax), float(a), float(b), float(vf)))
    return float(_batch_numpy(int(mode), *[np.array([float(z)]) for z in (L, v1, v2, lam, mu, vmax, a, b, vf)])[0])
