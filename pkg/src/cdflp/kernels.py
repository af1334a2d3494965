"""Hot loops over schedule pairs.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy version
with the same signature and bit-identical integer results. Set
``CDFLP_NO_NUMBA=1`` to force the numpy path (also used automatically when
numba cannot be imported).

Inputs are the arrays of :class:`cdflp.space.CompiledInstance`:
``rank_y`` (NY, J, T) and ``rank_z`` (NZ, J, T) hold the best rank position a
schedule offers customer j at period t (``none`` when it offers nothing),
``reward_at`` (J, none+1) the reward of the location at each rank position,
``cum`` (J, T+1) cumulative demand. Outputs are profits scaled by ``scale``.
"""
from __future__ import annotations

import os
import types

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("CDFLP_NO_NUMBA", "").lower() not in ("1", "true", "yes")
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------- numpy path

def _np_pair_block(rank_y, rank_z, reward_at, cum, none, num, scale):
    ny, n_cust, n_per = rank_y.shape
    nz = rank_z.shape[0]
    lead = np.zeros((ny, nz), dtype=np.int64)
    foll = np.zeros((ny, nz), dtype=np.int64)
    for j in range(n_cust):
        last = np.zeros((ny, nz), dtype=np.int64)
        cum_j = cum[j]
        for t in range(n_per):
            a = rank_y[:, j, t][:, None]
            b = rank_z[:, j, t][None, :]
            best = np.minimum(a, b)
            hit = best < none
            if not hit.any():
                continue
            value = reward_at[j][best] * (cum_j[t + 1] - cum_j[last])
            l_only = hit & (a < b)
            f_only = hit & (b < a)
            shared = hit & (a == b)
            lead += np.where(l_only, value * scale, 0) + np.where(shared, value * num, 0)
            foll += np.where(f_only, value * scale, 0) + np.where(shared, value * (scale - num), 0)
            last = np.where(hit, t + 1, last)
    return lead, foll


def _blocks(ny, nz, budget=2_000_000):
    step = max(1, budget // max(nz, 1))
    for lo in range(0, ny, step):
        yield lo, min(ny, lo + step)


def np_pair_profits(rank_y, rank_z, reward_at, cum, none, num, scale):
    """Full (NY, NZ) leader and follower profit tables."""
    ny, nz = rank_y.shape[0], rank_z.shape[0]
    lead = np.empty((ny, nz), dtype=np.int64)
    foll = np.empty((ny, nz), dtype=np.int64)
    for lo, hi in _blocks(ny, nz):
        lead[lo:hi], foll[lo:hi] = _np_pair_block(rank_y[lo:hi], rank_z, reward_at, cum, none, num, scale)
    return lead, foll


def np_reaction_scan(rank_y, rank_z, reward_at, cum, none, num, scale):
    """Per leader schedule: best follower value, optimistic and pessimistic reactions.

    Returns (best_f, opt_l, opt_z, pes_l, pes_z, n_opt); residual ties go to
    the lowest follower index.
    """
    ny = rank_y.shape[0]
    out = [np.empty(ny, dtype=np.int64) for _ in range(6)]
    for lo, hi in _blocks(ny, rank_z.shape[0]):
        lead, foll = _np_pair_block(rank_y[lo:hi], rank_z, reward_at, cum, none, num, scale)
        best = foll.max(axis=1)
        mask = foll == best[:, None]
        big = np.iinfo(np.int64).max
        opt_l = np.where(mask, lead, -big).max(axis=1)
        pes_l = np.where(mask, lead, big).min(axis=1)
        out[0][lo:hi] = best
        out[1][lo:hi] = opt_l
        out[2][lo:hi] = np.argmax(mask & (lead == opt_l[:, None]), axis=1)
        out[3][lo:hi] = pes_l
        out[4][lo:hi] = np.argmax(mask & (lead == pes_l[:, None]), axis=1)
        out[5][lo:hi] = mask.sum(axis=1)
    return tuple(out)


def np_joint_scan(rank_y, rank_z, reward_at, cum, none, num, scale):
    """Per leader schedule: max of leader+follower profit and the first follower index attaining it."""
    ny = rank_y.shape[0]
    best = np.empty(ny, dtype=np.int64)
    arg = np.empty(ny, dtype=np.int64)
    for lo, hi in _blocks(ny, rank_z.shape[0]):
        lead, foll = _np_pair_block(rank_y[lo:hi], rank_z, reward_at, cum, none, num, scale)
        total = lead + foll
        best[lo:hi] = total.max(axis=1)
        arg[lo:hi] = total.argmax(axis=1)
    return best, arg


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _nb_pair(ry, rz, reward_at, cum, none, num, scale):
        n_cust, n_per = ry.shape
        lead = 0
        foll = 0
        for j in range(n_cust):
            last = 0
            for t in range(n_per):
                a = ry[j, t]
                b = rz[j, t]
                if a >= none and b >= none:
                    continue
                if a < b:
                    lead += reward_at[j, a] * (cum[j, t + 1] - cum[j, last]) * scale
                elif b < a:
                    foll += reward_at[j, b] * (cum[j, t + 1] - cum[j, last]) * scale
                else:
                    value = reward_at[j, a] * (cum[j, t + 1] - cum[j, last])
                    lead += value * num
                    foll += value * (scale - num)
                last = t + 1
        return lead, foll

    @njit(cache=True, nogil=True)
    def nb_pair_profits(rank_y, rank_z, reward_at, cum, none, num, scale):
        ny = rank_y.shape[0]
        nz = rank_z.shape[0]
        lead = np.empty((ny, nz), dtype=np.int64)
        foll = np.empty((ny, nz), dtype=np.int64)
        for y in range(ny):
            for z in range(nz):
                lead[y, z], foll[y, z] = _nb_pair(rank_y[y], rank_z[z], reward_at, cum, none, num, scale)
        return lead, foll

    @njit(cache=True, nogil=True)
    def nb_reaction_scan(rank_y, rank_z, reward_at, cum, none, num, scale):
        ny = rank_y.shape[0]
        nz = rank_z.shape[0]
        best_f = np.empty(ny, dtype=np.int64)
        opt_l = np.empty(ny, dtype=np.int64)
        opt_z = np.empty(ny, dtype=np.int64)
        pes_l = np.empty(ny, dtype=np.int64)
        pes_z = np.empty(ny, dtype=np.int64)
        n_opt = np.empty(ny, dtype=np.int64)
        for y in range(ny):
            bf = -1
            ol = 0
            oz = 0
            pl = 0
            pz = 0
            cnt = 0
            for z in range(nz):
                lv, fv = _nb_pair(rank_y[y], rank_z[z], reward_at, cum, none, num, scale)
                if fv > bf:
                    bf = fv
                    ol = lv
                    oz = z
                    pl = lv
                    pz = z
                    cnt = 1
                elif fv == bf:
                    cnt += 1
                    if lv > ol:
                        ol = lv
                        oz = z
                    if lv < pl:
                        pl = lv
                        pz = z
            best_f[y] = bf
            opt_l[y] = ol
            opt_z[y] = oz
            pes_l[y] = pl
            pes_z[y] = pz
            n_opt[y] = cnt
        return best_f, opt_l, opt_z, pes_l, pes_z, n_opt

    @njit(cache=True, nogil=True)
    def nb_joint_scan(rank_y, rank_z, reward_at, cum, none, num, scale):
        ny = rank_y.shape[0]
        nz = rank_z.shape[0]
        best = np.empty(ny, dtype=np.int64)
        arg = np.empty(ny, dtype=np.int64)
        for y in range(ny):
            bj = -1
            bz = 0
            for z in range(nz):
                lv, fv = _nb_pair(rank_y[y], rank_z[z], reward_at, cum, none, num, scale)
                if lv + fv > bj:
                    bj = lv + fv
                    bz = z
            best[y] = bj
            arg[y] = bz
        return best, arg


numpy_kernels = types.SimpleNamespace(
    name="numpy", pair_profits=np_pair_profits, reaction_scan=np_reaction_scan, joint_scan=np_joint_scan)

if HAVE_NUMBA:
    numba_kernels = types.SimpleNamespace(
        name="numba", pair_profits=nb_pair_profits, reaction_scan=nb_reaction_scan, joint_scan=nb_joint_scan)
else:  # pragma: no cover
    numba_kernels = None


def get_kernels(backend: str | None = None):
    """Kernel namespace for ``backend`` ("numba"/"numpy"); default follows the env flag."""
    backend = backend or BACKEND
    if backend == "numba":
        if numba_kernels is None:
            raise RuntimeError("numba is not available")
        return numba_kernels
    if backend == "numpy":
        return numpy_kernels
    raise ValueError(f"unknown kernel backend {backend!r}")


def run(kernel: str, compiled, y_rows=None, z_rows=None, backend: str | None = None):
    """Call ``kernel`` on a CompiledInstance, optionally restricted to some schedule indices."""
    ks = get_kernels(backend)
    rank_y = compiled.leader_rank if y_rows is None else np.ascontiguousarray(compiled.leader_rank[y_rows])
    rank_z = compiled.follower_rank if z_rows is None else np.ascontiguousarray(compiled.follower_rank[z_rows])
    fn = getattr(ks, kernel)
    return fn(rank_y, rank_z, compiled.reward_at, compiled.cum,
              np.int64(compiled.none), np.int64(compiled.rho_num), np.int64(compiled.scale))
