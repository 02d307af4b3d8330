"""Compiled inner loop of the projected-Newton prox.

Same algorithm as the pure-Python path in prox.py, specialized for graphs
whose components all fit the dense solver.  The kernel is what makes the
ADMM sweeps affordable: one prox call costs a handful of microsecond-scale
component solves instead of Python-level sparse bookkeeping.

Status codes returned by the kernel:
    0  converged (gap <= tol)
    1  stalled: fixed point of Newton and projected-gradient maps
    2  line search failed and projected gradient could not improve
    3  iteration cap reached
"""

import numpy as np
from numba import njit
from numba.typed import List as NumbaList

_WOODBURY_OFF = False
REFINE_GAP_FACTOR = 2.0
LINESEARCH_SHRINK = 0.5
LINESEARCH_C1 = 1e-4
LINESEARCH_MAX = 50


@njit(cache=True)
def _dual_obj(n, ei, ej, u, dy):
    dtu = np.zeros(n)
    m = ei.shape[0]
    for e in range(m):
        dtu[ei[e]] += u[e]
        dtu[ej[e]] -= u[e]
    acc = 0.0
    for v in range(n):
        acc += dtu[v] * dtu[v]
    lin = 0.0
    for e in range(m):
        lin += u[e] * dy[e]
    return 0.5 * acc - lin


@njit(cache=True)
def _chol_factor(L):
    """In-place lower Cholesky of a small SPD matrix.

    Loop-level Cholesky beats a LAPACK dispatch for the small component
    systems that dominate here."""
    nc = L.shape[0]
    for j in range(nc):
        s = L[j, j]
        for p in range(j):
            s -= L[j, p] * L[j, p]
        d = np.sqrt(s)
        L[j, j] = d
        for i2 in range(j + 1, nc):
            s2 = L[i2, j]
            for p in range(j):
                s2 -= L[i2, p] * L[j, p]
            L[i2, j] = s2 / d


@njit(cache=True)
def _chol_apply(L, rhs):
    """Solve with an in-place factor from _chol_factor, overwriting rhs."""
    nc = L.shape[0]
    for i2 in range(nc):
        s2 = rhs[i2]
        for p in range(i2):
            s2 -= L[i2, p] * rhs[p]
        rhs[i2] = s2 / L[i2, i2]
    for i2 in range(nc - 1, -1, -1):
        s2 = rhs[i2]
        for p in range(i2 + 1, nc):
            s2 -= L[p, i2] * rhs[p]
        rhs[i2] = s2 / L[i2, i2]
    return rhs


@njit(cache=True)
def _uf_find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def newton_prox(n, ei, ej, y, lam, tol, u, max_newton, lip,
                full_vs, full_inv, fcomp, fpos, stats):
    """Projected Newton on the dual box QP; u is modified in place.

    full_vs / full_inv hold, per connected component of the *full* graph,
    the component's vertex ids and the dense inverse of its regularized
    Laplacian; they shortcut the solve whenever every edge is inactive.
    Returns (beta, gap, iterations, status).
    """
    m = ei.shape[0]
    r = lam / 2.0
    dy = np.empty(m)
    for e in range(m):
        dy[e] = y[ei[e]] - y[ej[e]]
    for e in range(m):
        if u[e] > r:
            u[e] = r
        elif u[e] < -r:
            u[e] = -r
    f_u = _dual_obj(n, ei, ej, u, dy)

    beta = np.empty(n)
    gap = 0.0
    best_gap = np.inf
    stall = 0
    for it in range(max_newton):
        dtu = np.zeros(n)
        for e in range(m):
            dtu[ei[e]] += u[e]
            dtu[ej[e]] -= u[e]
        for v in range(n):
            beta[v] = y[v] - dtu[v]
        gap = 0.0
        n_inactive = 0
        inactive = np.empty(m, dtype=np.bool_)
        grad = np.empty(m)
        for e in range(m):
            db = beta[ei[e]] - beta[ej[e]]
            term = r * abs(db) - u[e] * db
            if term > 0.0:
                gap += term
            grad[e] = -db
            act = (u[e] <= -r and grad[e] > 0.0) or (u[e] >= r and grad[e] < 0.0)
            inactive[e] = not act
            if not act:
                n_inactive += 1
        if gap <= tol:
            return beta, gap, it, 0
        if gap < best_gap * (1.0 - 1e-3):
            stall = 0
        if gap < best_gap:
            best_gap = gap
        if n_inactive == 0:
            return beta, gap, it, 1
        # Near the target gap the certificate is limited by the residual of
        # the reduced solves (ill-conditioned components leave |grad| noise
        # of order cond * eps on nearly-fused edges).  One step of iterative
        # refinement per solve pushes that floor far below any realistic
        # tolerance; it is only needed in the end game.
        refine = gap <= REFINE_GAP_FACTOR * tol

        # connected components of the inactive-edge subgraph
        parent = np.arange(n)
        for e in range(m):
            if inactive[e]:
                ra = _uf_find(parent, ei[e])
                rb = _uf_find(parent, ej[e])
                if ra != rb:
                    parent[rb] = ra
        lab = np.empty(n, dtype=np.int64)
        nlab = 0
        remap = np.full(n, -1, dtype=np.int64)
        for v in range(n):
            rv = _uf_find(parent, v)
            if remap[rv] < 0:
                remap[rv] = nlab
                nlab += 1
            lab[v] = remap[rv]

        w = np.empty(n)
        for v in range(n):
            w[v] = dtu[v] - y[v]
        z = np.zeros(n)
        stats[0] += 1.0
        if n_inactive == m and len(full_vs) > 0:
            stats[1] += 1.0
            # every edge inactive: use the cached full-component inverses
            for c in range(len(full_vs)):
                vs = full_vs[c]
                nc = vs.shape[0]
                rhs = np.empty(nc)
                mu = 0.0
                for t in range(nc):
                    mu += w[vs[t]]
                mu /= nc
                for t in range(nc):
                    rhs[t] = w[vs[t]] - mu
                zc = full_inv[c] @ rhs
                if refine:
                    s = 0.0
                    for t in range(nc):
                        s += zc[t]
                    s /= nc
                    r2 = np.empty(nc)
                    for t in range(nc):
                        r2[t] = rhs[t] - s
                    for e in range(m):
                        if fcomp[ei[e]] == c:
                            a = fpos[ei[e]]
                            b = fpos[ej[e]]
                            d = zc[a] - zc[b]
                            r2[a] -= d
                            r2[b] += d
                    d2 = full_inv[c] @ r2
                    for t in range(nc):
                        zc[t] += d2[t]
                mz = 0.0
                for t in range(nc):
                    mz += zc[t]
                mz /= nc
                for t in range(nc):
                    z[vs[t]] = zc[t] - mz
        else:
            counts = np.zeros(nlab, dtype=np.int64)
            for v in range(n):
                counts[lab[v]] += 1
            offsets = np.zeros(nlab + 1, dtype=np.int64)
            for c in range(nlab):
                offsets[c + 1] = offsets[c] + counts[c]
            order = np.empty(n, dtype=np.int64)
            fill = offsets[:-1].copy()
            for v in range(n):
                c = lab[v]
                order[fill[c]] = v
                fill[c] += 1
            pos = np.empty(n, dtype=np.int64)
            for t in range(n):
                pos[order[t]] = t
            # group inactive edges by component
            ecount = np.zeros(nlab, dtype=np.int64)
            for e in range(m):
                if inactive[e]:
                    ecount[lab[ei[e]]] += 1
            eoff = np.zeros(nlab + 1, dtype=np.int64)
            for c in range(nlab):
                eoff[c + 1] = eoff[c] + ecount[c]
            eorder = np.empty(n_inactive, dtype=np.int64)
            efill = eoff[:-1].copy()
            for e in range(m):
                if inactive[e]:
                    c = lab[ei[e]]
                    eorder[efill[c]] = e
                    efill[c] += 1

            # Woodbury shortcut: within a full-graph component, the reduced
            # system is the cached regularized Laplacian plus one low-rank
            # term per active edge, minus the global mean regularizer, plus
            # one mean regularizer per piece of the inactive subgraph.  A
            # kp x kp capacitance solve against the cached inverse then
            # replaces the per-piece dense factorizations whenever the
            # correction rank kp is small enough to win on flops.
            wb_done = np.zeros(nlab, dtype=np.bool_)
            subl = np.full(nlab, -1, dtype=np.int64)
            for c in range(len(full_vs)):
                vs = full_vs[c]
                nc = vs.shape[0]
                if nc < 64 or _WOODBURY_OFF or refine:
                    continue
                slot2 = np.empty(nc, dtype=np.int64)
                touched = np.empty(nc, dtype=np.int64)
                ns = 0
                for t in range(nc):
                    lb = lab[vs[t]]
                    if subl[lb] < 0:
                        subl[lb] = ns
                        touched[ns] = lb
                        ns += 1
                    slot2[t] = subl[lb]
                k = 0
                for e in range(m):
                    if not inactive[e] and fcomp[ei[e]] == c:
                        k += 1
                kp = k + 1 + ns if ns > 1 else k
                dense_cost = 0.0
                for s in range(ns):
                    nsz = float(counts[touched[s]])
                    dense_cost += nsz * nsz * nsz / 3.0
                fk = float(kp)
                fn = float(nc)
                wb_cost = fn * fn + fn * (k + ns + fk) + fk ** 3 / 3.0
                if wb_cost >= dense_cost:
                    for s in range(ns):
                        subl[touched[s]] = -1
                    continue
                inv = full_inv[c]
                scount = np.empty(ns)
                for s in range(ns):
                    scount[s] = float(counts[touched[s]])
                # right-hand side centered within each inactive piece
                smean = np.zeros(ns)
                for t in range(nc):
                    smean[slot2[t]] += w[vs[t]]
                for s in range(ns):
                    smean[s] /= scount[s]
                rhs = np.empty(nc)
                for t in range(nc):
                    rhs[t] = w[vs[t]] - smean[slot2[t]]
                x0 = inv @ rhs
                ea = np.empty(k, dtype=np.int64)
                eb = np.empty(k, dtype=np.int64)
                t = 0
                for e in range(m):
                    if not inactive[e] and fcomp[ei[e]] == c:
                        ea[t] = fpos[ei[e]]
                        eb[t] = fpos[ej[e]]
                        t += 1
                # the multi-piece correction grounds one root vertex per
                # piece (and removes the full component's mean regularizer),
                # so every correction column of Y is a column difference, a
                # copy, or exactly the ones vector, never an O(nc^2) sum
                roots = np.empty(ns, dtype=np.int64)
                if ns > 1:
                    for s in range(ns):
                        roots[s] = -1
                    for t in range(nc):
                        if roots[slot2[t]] < 0:
                            roots[slot2[t]] = t
                # Y = inv @ U; the cached inverse maps the ones vector to
                # itself and each of its columns sums to one
                Y = np.zeros((nc, kp))
                for t in range(nc):
                    row = inv[t]
                    for s in range(k):
                        Y[t, s] = row[ea[s]] - row[eb[s]]
                if ns > 1:
                    for t in range(nc):
                        Y[t, k] = 1.0
                        row = inv[t]
                        yr = Y[t]
                        for s in range(ns):
                            yr[k + 1 + s] = row[roots[s]]
                # capacitance C = D^{-1} + U^T Y and projection rk = U^T x0
                C = np.zeros((kp, kp))
                rk = np.zeros(kp)
                for s in range(k):
                    a = ea[s]
                    b = eb[s]
                    for j in range(kp):
                        C[s, j] = Y[a, j] - Y[b, j]
                    rk[s] = x0[a] - x0[b]
                if ns > 1:
                    # ones row: column sums of Y are 0 for edge columns,
                    # nc for the ones column, and 1 for each root column
                    C[k, k] = fn
                    for s in range(ns):
                        C[k, k + 1 + s] = 1.0
                    rk[k] = 0.0
                    for s in range(ns):
                        rt = roots[s]
                        yr = Y[rt]
                        for j in range(kp):
                            C[k + 1 + s, j] = yr[j]
                        rk[k + 1 + s] = x0[rt]
                for s in range(k):
                    C[s, s] += -1.0
                if ns > 1:
                    C[k, k] += -fn
                    for s in range(ns):
                        C[k + 1 + s, k + 1 + s] += 1.0
                if kp > 0:
                    tvec = np.linalg.solve(C, rk)
                    zc = x0 - Y @ tvec
                else:
                    zc = x0
                # re-center per inactive piece
                for s in range(ns):
                    smean[s] = 0.0
                for t in range(nc):
                    smean[slot2[t]] += zc[t]
                for s in range(ns):
                    smean[s] /= scount[s]
                for t in range(nc):
                    z[vs[t]] = zc[t] - smean[slot2[t]]
                for s in range(ns):
                    wb_done[touched[s]] = True
                    subl[touched[s]] = -1
                stats[2] += 1.0
                stats[3] += wb_cost

            for c in range(nlab):
                nc = counts[c]
                if nc <= 1 or eoff[c] == eoff[c + 1] or wb_done[c]:
                    continue
                stats[4] += 1.0
                stats[5] += float(nc) ** 3 / 3.0
                if nc > stats[6]:
                    stats[6] = float(nc)
                base = offsets[c]
                L = np.full((nc, nc), 1.0 / nc)
                for t in range(eoff[c], eoff[c + 1]):
                    e = eorder[t]
                    a = pos[ei[e]] - base
                    b = pos[ej[e]] - base
                    L[a, a] += 1.0
                    L[b, b] += 1.0
                    L[a, b] -= 1.0
                    L[b, a] -= 1.0
                rhs = np.empty(nc)
                mu = 0.0
                for t in range(nc):
                    mu += w[order[base + t]]
                mu /= nc
                for t in range(nc):
                    rhs[t] = w[order[base + t]] - mu
                if nc <= 128:
                    if refine:
                        Lc = L.copy()
                        rc = rhs.copy()
                        _chol_factor(L)
                        zc = _chol_apply(L, rhs)
                        r2 = rc - Lc @ zc
                        d2 = _chol_apply(L, r2)
                        for t in range(nc):
                            zc[t] += d2[t]
                    else:
                        _chol_factor(L)
                        zc = _chol_apply(L, rhs)
                else:
                    zc = np.linalg.solve(L, rhs)
                    if refine:
                        r2 = rhs - L @ zc
                        zc = zc + np.linalg.solve(L, r2)
                mz = 0.0
                for t in range(nc):
                    mz += zc[t]
                mz /= nc
                for t in range(nc):
                    z[order[base + t]] = zc[t] - mz

        # line search on the inactive coordinates
        trial = np.empty(m)
        f_t = f_u
        alpha = 1.0
        accepted = False
        for _ in range(LINESEARCH_MAX):
            slope = 0.0
            for e in range(m):
                if inactive[e]:
                    v = u[e] - alpha * (z[ei[e]] - z[ej[e]])
                    if v > r:
                        v = r
                    elif v < -r:
                        v = -r
                    trial[e] = v
                    slope += grad[e] * (v - u[e])
                else:
                    trial[e] = u[e]
            f_t = _dual_obj(n, ei, ej, trial, dy)
            if f_t <= f_u + LINESEARCH_C1 * slope:
                accepted = True
                break
            alpha *= LINESEARCH_SHRINK
        progress = accepted and f_t <= f_u - 1e-15 * (1.0 + abs(f_u))
        if not progress:
            # At the objective's double-precision floor the Armijo comparison
            # is dominated by summation noise, so a full Newton step that
            # would finish the job can be rejected.  Judge it by the gap
            # certificate it produces instead.
            t1 = np.empty(m)
            for e in range(m):
                if inactive[e]:
                    v = u[e] - (z[ei[e]] - z[ej[e]])
                    if v > r:
                        v = r
                    elif v < -r:
                        v = -r
                    t1[e] = v
                else:
                    t1[e] = u[e]
            dt1 = np.zeros(n)
            for e in range(m):
                dt1[ei[e]] += t1[e]
                dt1[ej[e]] -= t1[e]
            gap1 = 0.0
            for e in range(m):
                db1 = (y[ei[e]] - dt1[ei[e]]) - (y[ej[e]] - dt1[ej[e]])
                term = r * abs(db1) - t1[e] * db1
                if term > 0.0:
                    gap1 += term
            if gap1 < gap * (1.0 - 1e-3):
                trial = t1
                f_t = _dual_obj(n, ei, ej, t1, dy)
                for e in range(m):
                    u[e] = trial[e]
                f_u = f_t
                continue
            stall += 1
            if accepted and stall <= 10:
                # objective is at its double-precision floor, but flat moves
                # along the optimal face can still tighten the gap certificate
                pass
            else:
                # projected-gradient rescue with a safe 1/L step
                pg = np.empty(m)
                for e in range(m):
                    v = u[e] - grad[e] / lip
                    if v > r:
                        v = r
                    elif v < -r:
                        v = -r
                    pg[e] = v
                f_pg = _dual_obj(n, ei, ej, pg, dy)
                if f_pg < f_u:
                    trial = pg
                    f_t = f_pg
                elif accepted:
                    return beta, gap, it, 1
                else:
                    return beta, gap, it, 2
        for e in range(m):
            u[e] = trial[e]
        f_u = f_t
    return beta, gap, max_newton, 3


def make_component_inverses(g):
    """Kernel-side view of the full graph: per component the vertex ids and
    the dense inverse of its regularized Laplacian (numba typed lists), plus
    the component label and within-component position of every vertex."""
    full_vs = NumbaList()
    full_inv = NumbaList()
    labels = g.component_label.astype(np.int64)
    fpos = np.zeros(g.n, dtype=np.int64)
    for c in range(g.q):
        vs = np.where(labels == c)[0].astype(np.int64)
        nc = len(vs)
        fpos[vs] = np.arange(nc)
        pos = {int(v): t for t, v in enumerate(vs)}
        L = np.full((nc, nc), 1.0 / nc)
        for i, j in g.edges:
            if labels[i] != c:
                continue
            a, b = pos[int(i)], pos[int(j)]
            L[a, a] += 1.0
            L[b, b] += 1.0
            L[a, b] -= 1.0
            L[b, a] -= 1.0
        full_vs.append(vs)
        full_inv.append(np.linalg.inv(L))
    return full_vs, full_inv, labels, fpos
