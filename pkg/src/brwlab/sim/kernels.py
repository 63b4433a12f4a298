"""Compiled replicate loops.

Each kernel simulates a batch of replicates with the genealogical RNG from
:mod:`brwlab.sim.rng` and prunes a lineage as soon as it can no longer change
the quantity being counted.  Pruning never changes which random numbers a
surviving particle sees.

A lineage that is still open when the run stops (time horizon, particle budget,
release barrier) is "pending".  For every level it has not yet passed it adds
a guaranteed minimum to ``extra_low`` and an upper bound on the conditional
mean of its future contribution to ``extra_high``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from brwlab.sim.rng import child_key, exponential, rep_key, uniform

INF = np.inf


@njit(cache=True, inline="always")
def _plus_bound(x, s, phi, lam, m, bounded):
    if not bounded:
        return INF
    w = 1.0 if s > 0 else m
    return w * math.exp(lam * (phi - x))


@njit(cache=True, inline="always")
def _minus_bound(x, s, psi, lam, m, bounded):
    if not bounded:
        return INF
    w = 1.0 / m if s > 0 else 1.0
    return w * math.exp(-lam * (x + psi))


@njit(cache=True)
def _pending_levels(r, x, s, ip, im, phis_p, phis_m, lam, m, bounded, supercrit,
                    low_p, high_p, low_m, high_m, flag_p, flag_m):
    for k in range(ip, phis_p.shape[0]):
        low_p[r, k] += 1.0
        high_p[r, k] += _plus_bound(x, s, phis_p[k], lam, m, bounded)
        flag_p[r, k] = True
    for k in range(im, phis_m.shape[0]):
        if supercrit:
            low_m[r, k] += 1.0
        high_m[r, k] += _minus_bound(x, s, phis_m[k], lam, m, bounded)
        flag_m[r, k] = True


@njit(cache=True)
def level_batch(qp, qm, beta, root_s, phis_p, phis_m, horizon, budget, release,
                bounded, seed, rep0, nrep):
    """Counts at plus levels ``phis_p`` and minus levels ``-phis_m`` (both ascending)."""
    lp = phis_p.shape[0]
    lm = phis_m.shape[0]
    lam = 0.5 * (qm - qp)
    m = math.sqrt(qm / qp)
    supercrit = not bounded

    cnt_p = np.zeros((nrep, lp), np.int64)
    cnt_m = np.zeros((nrep, lm), np.int64)
    low_p = np.zeros((nrep, lp))
    high_p = np.zeros((nrep, lp))
    low_m = np.zeros((nrep, lm))
    high_m = np.zeros((nrep, lm))
    cens_p = np.zeros((nrep, lp), np.bool_)
    cens_m = np.zeros((nrep, lm), np.bool_)
    rel_m = np.zeros((nrep, lm), np.bool_)
    budget_hit = np.zeros(nrep, np.bool_)
    events = np.zeros(nrep, np.int64)

    cap = budget + 2
    st_t = np.empty(cap)
    st_x = np.empty(cap)
    st_s = np.empty(cap, np.int64)
    st_k = np.empty(cap, np.uint64)
    st_ip = np.empty(cap, np.int64)
    st_im = np.empty(cap, np.int64)

    for r in range(nrep):
        sp = 0
        st_t[0] = 0.0
        st_x[0] = 0.0
        st_s[0] = root_s
        st_k[0] = rep_key(seed, rep0 + r)
        st_ip[0] = 0
        st_im[0] = 0
        sp = 1
        created = 1
        hit = False
        ev = 0
        while sp > 0:
            sp -= 1
            t = st_t[sp]
            x = st_x[sp]
            s = st_s[sp]
            key = st_k[sp]
            ip = st_ip[sp]
            im = st_im[sp]
            if hit:
                _pending_levels(r, x, s, ip, im, phis_p, phis_m, lam, m, bounded, supercrit,
                                low_p, high_p, low_m, high_m, cens_p, cens_m)
                continue
            n = 0
            while True:
                q = qp if s > 0 else qm
                kk = q + beta
                te = t + exponential(key, 3 * n, kk)
                trunc = te >= horizon
                if trunc:
                    te = horizon
                ev += 1
                if s > 0:
                    x = x + (te - t)
                    while ip < lp and phis_p[ip] <= x:
                        cnt_p[r, ip] += 1
                        ip += 1
                else:
                    x = x - (te - t)
                    while im < lm and -phis_m[im] >= x:
                        cnt_m[r, im] += 1
                        im += 1
                t = te
                if ip == lp and im == lm:
                    break
                if trunc:
                    _pending_levels(r, x, s, ip, im, phis_p, phis_m, lam, m, bounded, supercrit,
                                    low_p, high_p, low_m, high_m, cens_p, cens_m)
                    break
                if bounded and ip == lp and x + phis_m[im] >= release:
                    _pending_levels(r, x, s, ip, im, phis_p, phis_m, lam, m, bounded, supercrit,
                                    low_p, high_p, low_m, high_m, rel_m, rel_m)
                    break
                if uniform(key, 3 * n + 1) * kk < q:
                    s = -s
                    n += 1
                    continue
                if created + 2 > budget:
                    hit = True
                    _pending_levels(r, x, s, ip, im, phis_p, phis_m, lam, m, bounded, supercrit,
                                    low_p, high_p, low_m, high_m, cens_p, cens_m)
                    break
                created += 2
                st_t[sp] = t
                st_x[sp] = x
                st_s[sp] = s
                st_k[sp] = child_key(key, 2)
                st_ip[sp] = ip
                st_im[sp] = im
                sp += 1
                key = child_key(key, 1)
                n = 0
        budget_hit[r] = hit
        events[r] = ev
    return (cnt_p, cnt_m, low_p, high_p, low_m, high_m, cens_p, cens_m, rel_m,
            budget_hit, events)


@njit(cache=True)
def _pending_winding(r, x, s, k, n_stages, lam, m, bounded, low, high, flag):
    # expected counts at later stages alternate the factors m and 1/m
    if k % 2 == 0:
        b = _minus_bound(x, s, 0.0, lam, m, bounded)
        fac_next = m
    else:
        b = _plus_bound(x, s, 0.0, lam, m, bounded)
        fac_next = 1.0 / m
    sure = k % 2 == 1
    for j in range(k + 1, n_stages):
        high[r, j] += b
        if sure or not bounded:
            low[r, j] += 1.0
        sure = False
        flag[r, j] = True
        b = b * fac_next
        fac_next = 1.0 / fac_next


@njit(cache=True)
def winding_batch(qp, qm, beta, n_stages, horizon, budget, release, bounded, seed, rep0, nrep):
    """Alternation counts ``w[j]`` for a plus root; ``W+(n) = w[2n]``, ``W-(n) = w[2n+1]``."""
    lam = 0.5 * (qm - qp)
    m = math.sqrt(qm / qp)
    cnt = np.zeros((nrep, n_stages), np.int64)
    low = np.zeros((nrep, n_stages))
    high = np.zeros((nrep, n_stages))
    cens = np.zeros((nrep, n_stages), np.bool_)
    rel = np.zeros((nrep, n_stages), np.bool_)
    budget_hit = np.zeros(nrep, np.bool_)
    events = np.zeros(nrep, np.int64)

    cap = budget + 2
    st_t = np.empty(cap)
    st_x = np.empty(cap)
    st_s = np.empty(cap, np.int64)
    st_k = np.empty(cap, np.uint64)
    st_g = np.empty(cap, np.int64)

    for r in range(nrep):
        cnt[r, 0] = 1
        st_t[0] = 0.0
        st_x[0] = 0.0
        st_s[0] = 1
        st_k[0] = rep_key(seed, rep0 + r)
        st_g[0] = 0
        sp = 1
        created = 1
        hit = False
        ev = 0
        while sp > 0:
            sp -= 1
            t = st_t[sp]
            x = st_x[sp]
            s = st_s[sp]
            key = st_k[sp]
            g = st_g[sp]
            if hit:
                _pending_winding(r, x, s, g, n_stages, lam, m, bounded, low, high, cens)
                continue
            n = 0
            while True:
                q = qp if s > 0 else qm
                kk = q + beta
                te = t + exponential(key, 3 * n, kk)
                trunc = te >= horizon
                if trunc:
                    te = horizon
                ev += 1
                x = x + s * (te - t)
                t = te
                if g % 2 == 0 and s < 0 and x < 0.0:
                    g += 1
                    cnt[r, g] += 1
                elif g % 2 == 1 and s > 0 and x > 0.0:
                    g += 1
                    cnt[r, g] += 1
                if g + 1 >= n_stages:
                    break
                if trunc:
                    _pending_winding(r, x, s, g, n_stages, lam, m, bounded, low, high, cens)
                    break
                if bounded and g % 2 == 0 and x >= release:
                    _pending_winding(r, x, s, g, n_stages, lam, m, bounded, low, high, rel)
                    break
                if uniform(key, 3 * n + 1) * kk < q:
                    s = -s
                    n += 1
                    continue
                if created + 2 > budget:
                    hit = True
                    _pending_winding(r, x, s, g, n_stages, lam, m, bounded, low, high, cens)
                    break
                created += 2
                st_t[sp] = t
                st_x[sp] = x
                st_s[sp] = s
                st_k[sp] = child_key(key, 2)
                st_g[sp] = g
                sp += 1
                key = child_key(key, 1)
                n = 0
        budget_hit[r] = hit
        events[r] = ev
    return cnt, low, high, cens, rel, budget_hit, events


@njit(cache=True)
def _pending_nested(r, x, s, v, psi, betas, lam, m, beta_c_hi, low, high, flag):
    for j in range(betas.shape[0]):
        if betas[j] >= v:
            bounded = betas[j] <= beta_c_hi
            high[r, j] += _minus_bound(x, s, psi, lam, m, bounded)
            if not bounded:
                low[r, j] += 1.0
            flag[r, j] = True


@njit(cache=True)
def nested_batch(qp, qm, beta0, betas, psi, horizon, budget, release, beta_c_hi, seed, rep0, nrep):
    """``N-(psi, beta)`` for every ``beta`` in the ascending array ``betas``.

    One tree per replicate at ``beta0``.  A particle carries ``v``, the
    smallest birth rate whose erased sub-model still contains it.
    """
    lam = 0.5 * (qm - qp)
    m = math.sqrt(qm / qp)
    nb = betas.shape[0]
    bmax = betas[nb - 1]
    can_release = bmax <= beta_c_hi
    cnt = np.zeros((nrep, nb), np.int64)
    low = np.zeros((nrep, nb))
    high = np.zeros((nrep, nb))
    cens = np.zeros((nrep, nb), np.bool_)
    rel = np.zeros((nrep, nb), np.bool_)
    budget_hit = np.zeros(nrep, np.bool_)
    events = np.zeros(nrep, np.int64)

    cap = budget + 2
    st_t = np.empty(cap)
    st_x = np.empty(cap)
    st_s = np.empty(cap, np.int64)
    st_k = np.empty(cap, np.uint64)
    st_v = np.empty(cap)

    for r in range(nrep):
        st_t[0] = 0.0
        st_x[0] = 0.0
        st_s[0] = 1
        st_k[0] = rep_key(seed, rep0 + r)
        st_v[0] = 0.0
        sp = 1
        created = 1
        hit = False
        ev = 0
        while sp > 0:
            sp -= 1
            t = st_t[sp]
            x = st_x[sp]
            s = st_s[sp]
            key = st_k[sp]
            v = st_v[sp]
            if hit:
                _pending_nested(r, x, s, v, psi, betas, lam, m, beta_c_hi, low, high, cens)
                continue
            n = 0
            while True:
                q = qp if s > 0 else qm
                kk = q + beta0
                te = t + exponential(key, 3 * n, kk)
                trunc = te >= horizon
                if trunc:
                    te = horizon
                ev += 1
                x = x + s * (te - t)
                t = te
                if s < 0 and x <= -psi:
                    for j in range(nb):
                        if betas[j] >= v:
                            cnt[r, j] += 1
                    break
                if trunc:
                    _pending_nested(r, x, s, v, psi, betas, lam, m, beta_c_hi, low, high, cens)
                    break
                if can_release and x + psi >= release:
                    _pending_nested(r, x, s, v, psi, betas, lam, m, beta_c_hi, low, high, rel)
                    break
                if uniform(key, 3 * n + 1) * kk < q:
                    s = -s
                    n += 1
                    continue
                v2 = max(v, beta0 * uniform(key, 3 * n + 2))
                if v2 <= bmax:
                    if created + 2 > budget:
                        hit = True
                        _pending_nested(r, x, s, v, psi, betas, lam, m, beta_c_hi, low, high, cens)
                        break
                    created += 2
                    st_t[sp] = t
                    st_x[sp] = x
                    st_s[sp] = s
                    st_k[sp] = child_key(key, 2)
                    st_v[sp] = v2
                    sp += 1
                key = child_key(key, 1)
                n = 0
        budget_hit[r] = hit
        events[r] = ev
    return cnt, low, high, cens, rel, budget_hit, events


@njit(cache=True)
def dip_batch(qp, qm, beta, horizons, budget, seed, rep0, nrep):
    """Whether some particle of a plus-rooted tree is left of 0 before ``horizons[-1]``.

    Iterative deepening over the ascending ``horizons``: a lineage at ``(t, x)``
    with ``x > h - t`` cannot go negative before ``h`` and is dropped.
    Returns ``dip`` and ``undetermined`` (budget hit before a decision).
    """
    dip = np.zeros(nrep, np.bool_)
    undetermined = np.zeros(nrep, np.bool_)
    events = np.zeros(nrep, np.int64)
    cap = budget + 2
    st_t = np.empty(cap)
    st_x = np.empty(cap)
    st_s = np.empty(cap, np.int64)
    st_k = np.empty(cap, np.uint64)
    for r in range(nrep):
        k0 = rep_key(seed, rep0 + r)
        ev = 0
        for hi in range(horizons.shape[0]):
            h = horizons[hi]
            st_t[0] = 0.0
            st_x[0] = 0.0
            st_s[0] = 1
            st_k[0] = k0
            sp = 1
            created = 1
            found = False
            hit = False
            while sp > 0 and not found and not hit:
                sp -= 1
                t = st_t[sp]
                x = st_x[sp]
                s = st_s[sp]
                key = st_k[sp]
                n = 0
                while True:
                    if x > h - t:
                        break
                    q = qp if s > 0 else qm
                    kk = q + beta
                    te = t + exponential(key, 3 * n, kk)
                    if te > h:
                        te = h
                    ev += 1
                    x = x + s * (te - t)
                    t = te
                    if x < 0.0:
                        found = True
                        break
                    if t >= h:
                        break
                    if uniform(key, 3 * n + 1) * kk < q:
                        s = -s
                        n += 1
                        continue
                    if created + 2 > budget:
                        hit = True
                        break
                    created += 2
                    st_t[sp] = t
                    st_x[sp] = x
                    st_s[sp] = s
                    st_k[sp] = child_key(key, 2)
                    sp += 1
                    key = child_key(key, 1)
                    n = 0
            if found:
                dip[r] = True
                break
            if hit:
                undetermined[r] = True
                break
        events[r] = ev
    return dip, undetermined, events


@njit(cache=True)
def first_passage_batch(qp, qm, beta, horizon, seed, rep0, nrep):
    """``exp(-beta tau)`` per replicate, ``tau`` the first time the chain's path is negative.

    Returns ``(value, censored)``; a censored replicate has ``tau > horizon``.
    """
    val = np.zeros(nrep)
    cens = np.zeros(nrep, np.bool_)
    for r in range(nrep):
        key = rep_key(seed, rep0 + r)
        t = 0.0
        x = 0.0
        s = 1
        c = 0
        while True:
            w = exponential(key, c, qp if s > 0 else qm)
            c += 1
            if s < 0 and x - w < 0.0:
                tau = t + x
                if tau <= horizon:
                    val[r] = math.exp(-beta * tau)
                else:
                    cens[r] = True
                break
            if t + w > horizon:
                cens[r] = True
                break
            t += w
            x += s * w
            s = -s
    return val, cens


@njit(cache=True)
def chain_positions_batch(qp, qm, times, seed, rep0, nrep):
    """Position of the chain's path at each of the ascending ``times``."""
    nt = times.shape[0]
    out = np.empty((nrep, nt))
    for r in range(nrep):
        key = rep_key(seed, rep0 + r)
        t = 0.0
        x = 0.0
        s = 1
        c = 0
        j = 0
        while j < nt:
            w = exponential(key, c, qp if s > 0 else qm)
            c += 1
            while j < nt and times[j] <= t + w:
                out[r, j] = x + s * (times[j] - t)
                j += 1
            t += w
            x += s * w
            s = -s
    return out
