"""Hot numeric loops, compiled with numba when the backend allows it.

Each kernel has two implementations with identical call signatures: a
nopython numba version and a pure-numpy fallback.  `_backend.BACKEND`
picks which set the package-level aliases point at.  The numpy versions
are the reference semantics; the numba versions are the fast path
(roughly 20-40x on trajectory workloads, see benchmarks/).

Array conventions: float64 throughout, edge lists as three parallel
arrays (i, j, stiffness) with i < j, records written every `stride`
steps including step 0.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import BACKEND


# ---------------------------------------------------------------------------
# pure-numpy implementations


def _verlet_numpy(masses, onsite, edge_i, edge_j, edge_k,
                  x0, p0, dt, n_steps, gamma, stride, record_states):
    """Velocity-Verlet trajectory with per-site energy records.

    Damping enters as an exact momentum decay exp(-gamma*dt) applied
    before and after the symplectic kick-drift-kick; a uniform rate
    gamma makes the total energy decay like exp(-2 gamma t).

    Returns (kin, pot, xs, ps, x, p): kinetic and half-split potential
    energy per site at each record, optional recorded states, and the
    final state.
    """
    d = x0.shape[0]
    n_rec = n_steps // stride + 1
    kin = np.zeros((n_rec, d))
    pot = np.zeros((n_rec, d))
    if record_states:
        xs = np.zeros((n_rec, d))
        ps = np.zeros((n_rec, d))
    else:
        xs = np.zeros((1, 1))
        ps = np.zeros((1, 1))

    # dense stiffness rebuilt here: D is at most a few hundred
    kmat = np.diag(onsite.astype(float))
    for e in range(edge_i.shape[0]):
        i, j, ke = edge_i[e], edge_j[e], edge_k[e]
        kmat[i, i] += ke
        kmat[j, j] += ke
        kmat[i, j] -= ke
        kmat[j, i] -= ke

    x = x0.copy()
    p = p0.copy()
    damp = math.exp(-gamma * dt) if gamma != 0.0 else 1.0
    half = 0.5 * dt
    inv_m = 1.0 / masses

    def record(r):
        kin[r] = 0.5 * p * p * inv_m
        site = 0.5 * onsite * x * x
        if edge_i.shape[0]:
            de = x[edge_i] - x[edge_j]
            epot = 0.25 * edge_k * de * de  # half of the spring energy
            np.add.at(site, edge_i, epot)
            np.add.at(site, edge_j, epot)
        pot[r] = site
        if record_states:
            xs[r] = x
            ps[r] = p

    record(0)
    f = -kmat @ x
    r = 1
    for step in range(1, n_steps + 1):
        if damp != 1.0:
            p *= damp
        p += half * f
        x += dt * p * inv_m
        f = -kmat @ x
        p += half * f
        if damp != 1.0:
            p *= damp
        if step % stride == 0:
            record(r)
            r += 1
    return kin, pot, xs, ps, x, p


def _rk4_hopping_numpy(indptr, indices, hop_rate, sink_site, sink_rate,
                       p0, dt, n_steps, stride):
    """Classical hopping master equation, fixed-step RK4.

    dp_i/dt = hop_rate * sum_{j~i} (p_j - p_i) - sink_rate * [i == sink] p_i
    Returns occupations at each record, shape (n_rec, D).
    """
    d = p0.shape[0]
    deg = np.diff(indptr).astype(float)
    adj = np.zeros((d, d))
    for i in range(d):
        adj[i, indices[indptr[i]:indptr[i + 1]]] = 1.0

    def deriv(p):
        out = hop_rate * (adj @ p - deg * p)
        if sink_rate != 0.0:
            out[sink_site] -= sink_rate * p[sink_site]
        return out

    n_rec = n_steps // stride + 1
    occ = np.zeros((n_rec, d))
    p = p0.copy()
    occ[0] = p
    r = 1
    for step in range(1, n_steps + 1):
        k1 = deriv(p)
        k2 = deriv(p + 0.5 * dt * k1)
        k3 = deriv(p + 0.5 * dt * k2)
        k4 = deriv(p + dt * k3)
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0:
            occ[r] = p
            r += 1
    return occ


def _jacobi_eigh_numpy(a_in, max_sweeps, tol):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Returns (eigenvalues, vectors, off_norm, sweeps) with eigenpairs in
    sweep order (unsorted); off_norm is the remaining off-diagonal
    Frobenius norm when the sweep loop stopped.
    """
    a = a_in.copy()
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return np.array([a[0, 0]]), v, 0.0, 0
    sweeps = 0
    off = _off_norm_numpy(a)
    target = tol * max(np.linalg.norm(a_in), 1e-300)
    while off > target and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                if abs(apq) < 1e-280:  # tau would overflow; already zero
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweeps += 1
        off = _off_norm_numpy(a)
    return np.diag(a).copy(), v, off, sweeps


def _off_norm_numpy(a):
    # sum only the off-diagonal entries: subtracting the diagonal from
    # the full Frobenius norm cancels catastrophically once the matrix
    # is nearly diagonal
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


# ---------------------------------------------------------------------------
# numba implementations

if BACKEND == "numba":
    from numba import njit

    @njit(cache=True, nogil=True)
    def _forces(x, onsite, edge_i, edge_j, edge_k, f):
        d = x.shape[0]
        for i in range(d):
            f[i] = -onsite[i] * x[i]
        for e in range(edge_i.shape[0]):
            s = edge_k[e] * (x[edge_i[e]] - x[edge_j[e]])
            f[edge_i[e]] -= s
            f[edge_j[e]] += s

    @njit(cache=True, nogil=True)
    def _record_energies(x, p, masses, onsite, edge_i, edge_j, edge_k,
                         kin, pot, r):
        d = x.shape[0]
        for i in range(d):
            kin[r, i] = 0.5 * p[i] * p[i] / masses[i]
            pot[r, i] = 0.5 * onsite[i] * x[i] * x[i]
        for e in range(edge_i.shape[0]):
            de = x[edge_i[e]] - x[edge_j[e]]
            epot = 0.25 * edge_k[e] * de * de
            pot[r, edge_i[e]] += epot
            pot[r, edge_j[e]] += epot

    @njit(cache=True, nogil=True)
    def _verlet_numba(masses, onsite, edge_i, edge_j, edge_k,
                      x0, p0, dt, n_steps, gamma, stride, record_states):
        d = x0.shape[0]
        n_rec = n_steps // stride + 1
        kin = np.zeros((n_rec, d))
        pot = np.zeros((n_rec, d))
        if record_states:
            xs = np.zeros((n_rec, d))
            ps = np.zeros((n_rec, d))
        else:
            xs = np.zeros((1, 1))
            ps = np.zeros((1, 1))
        x = x0.copy()
        p = p0.copy()
        f = np.zeros(d)
        damp = math.exp(-gamma * dt) if gamma != 0.0 else 1.0
        half = 0.5 * dt

        _record_energies(x, p, masses, onsite, edge_i, edge_j, edge_k,
                         kin, pot, 0)
        if record_states:
            for i in range(d):
                xs[0, i] = x[i]
                ps[0, i] = p[i]
        _forces(x, onsite, edge_i, edge_j, edge_k, f)
        r = 1
        for step in range(1, n_steps + 1):
            if damp != 1.0:
                for i in range(d):
                    p[i] *= damp
            for i in range(d):
                p[i] += half * f[i]
                x[i] += dt * p[i] / masses[i]
            _forces(x, onsite, edge_i, edge_j, edge_k, f)
            for i in range(d):
                p[i] += half * f[i]
            if damp != 1.0:
                for i in range(d):
                    p[i] *= damp
            if step % stride == 0:
                _record_energies(x, p, masses, onsite, edge_i, edge_j,
                                 edge_k, kin, pot, r)
                if record_states:
                    for i in range(d):
                        xs[r, i] = x[i]
                        ps[r, i] = p[i]
                r += 1
        return kin, pot, xs, ps, x, p

    @njit(cache=True, nogil=True)
    def _hop_deriv(p, indptr, indices, hop_rate, sink_site, sink_rate, out):
        d = p.shape[0]
        for i in range(d):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc += p[indices[jj]] - p[i]
            out[i] = hop_rate * acc
        if sink_rate != 0.0:
            out[sink_site] -= sink_rate * p[sink_site]

    @njit(cache=True, nogil=True)
    def _rk4_hopping_numba(indptr, indices, hop_rate, sink_site, sink_rate,
                           p0, dt, n_steps, stride):
        d = p0.shape[0]
        n_rec = n_steps // stride + 1
        occ = np.zeros((n_rec, d))
        p = p0.copy()
        k1 = np.zeros(d)
        k2 = np.zeros(d)
        k3 = np.zeros(d)
        k4 = np.zeros(d)
        tmp = np.zeros(d)
        for i in range(d):
            occ[0, i] = p[i]
        r = 1
        for step in range(1, n_steps + 1):
            _hop_deriv(p, indptr, indices, hop_rate, sink_site, sink_rate, k1)
            for i in range(d):
                tmp[i] = p[i] + 0.5 * dt * k1[i]
            _hop_deriv(tmp, indptr, indices, hop_rate, sink_site, sink_rate, k2)
            for i in range(d):
                tmp[i] = p[i] + 0.5 * dt * k2[i]
            _hop_deriv(tmp, indptr, indices, hop_rate, sink_site, sink_rate, k3)
            for i in range(d):
                tmp[i] = p[i] + dt * k3[i]
            _hop_deriv(tmp, indptr, indices, hop_rate, sink_site, sink_rate, k4)
            for i in range(d):
                p[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if step % stride == 0:
                for i in range(d):
                    occ[r, i] = p[i]
                r += 1
        return occ

    @njit(cache=True, nogil=True)
    def _off_norm_numba(a):
        n = a.shape[0]
        acc = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    acc += a[i, j] * a[i, j]
        return math.sqrt(acc)

    @njit(cache=True, nogil=True)
    def _jacobi_eigh_numba(a_in, max_sweeps, tol):
        a = a_in.copy()
        n = a.shape[0]
        v = np.eye(n)
        if n == 1:
            w = np.zeros(1)
            w[0] = a[0, 0]
            return w, v, 0.0, 0
        norm = 0.0
        for i in range(n):
            for j in range(n):
                norm += a_in[i, j] * a_in[i, j]
        target = tol * max(math.sqrt(norm), 1e-300)
        sweeps = 0
        off = _off_norm_numba(a)
        while off > target and sweeps < max_sweeps:
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    if abs(apq) < 1e-280:
                        a[p, q] = 0.0
                        a[q, p] = 0.0
                        continue
                    tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = math.copysign(1.0, tau) / (abs(tau)
                                                   + math.sqrt(1.0 + tau * tau))
                    c = 1.0 / math.sqrt(1.0 + t * t)
                    s = t * c
                    for idx in range(n):
                        arp = a[p, idx]
                        arq = a[q, idx]
                        a[p, idx] = c * arp - s * arq
                        a[q, idx] = s * arp + c * arq
                    for idx in range(n):
                        acp = a[idx, p]
                        acq = a[idx, q]
                        a[idx, p] = c * acp - s * acq
                        a[idx, q] = s * acp + c * acq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for idx in range(n):
                        vp = v[idx, p]
                        vq = v[idx, q]
                        v[idx, p] = c * vp - s * vq
                        v[idx, q] = s * vp + c * vq
            sweeps += 1
            off = _off_norm_numba(a)
        w = np.zeros(n)
        for i in range(n):
            w[i] = a[i, i]
        return w, v, off, sweeps

    verlet_trajectory = _verlet_numba
    rk4_hopping = _rk4_hopping_numba
    jacobi_eigh = _jacobi_eigh_numba
else:
    verlet_trajectory = _verlet_numpy
    rk4_hopping = _rk4_hopping_numpy
    jacobi_eigh = _jacobi_eigh_numpy


def warmup():
    """Trigger JIT compilation on tiny inputs (no-op on the numpy path)."""
    masses = np.ones(2)
    onsite = np.zeros(2)
    ei = np.zeros(1, dtype=np.int64)
    ej = np.ones(1, dtype=np.int64)
    ek = np.ones(1)
    x = np.array([0.1, 0.0])
    p = np.zeros(2)
    verlet_trajectory(masses, onsite, ei, ej, ek, x, p, 0.01, 2, 0.0, 1, False)
    verlet_trajectory(masses, onsite, ei, ej, ek, x, p, 0.01, 2, 0.1, 1, True)
    indptr = np.array([0, 1, 2], dtype=np.int64)
    indices = np.array([1, 0], dtype=np.int64)
    rk4_hopping(indptr, indices, 1.0, 1, 0.5, np.array([1.0, 0.0]), 0.01, 2, 1)
    jacobi_eigh(np.array([[2.0, -1.0], [-1.0, 2.0]]), 30, 1e-14)
