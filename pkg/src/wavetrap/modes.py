"""Spectral analysis: normal modes, chain dispersion, side-branch scattering
and the phase-matching prediction of resonant capture frequencies.

The eigensolver is a cyclic Jacobi iteration on the mass-weighted
stiffness matrix (robust at the dimensions this package targets, and it
shares the kernel backend machinery with the dynamics loops).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import StiffnessSystem


class EigenSolverError(RuntimeError):
    """Jacobi sweeps exhausted before reaching the convergence target."""


@dataclass(frozen=True)
class ModeBasis:
    """Eigenfrequencies (ascending) and mass-orthonormal mode vectors.

    vectors[:, a] satisfies  stiffness @ v = omega_a^2 * diag(mass) @ v
    and  V.T @ diag(mass) @ V == identity.
    """

    frequencies: np.ndarray
    vectors: np.ndarray

    @property
    def max_frequency(self) -> float:
        return float(self.frequencies[-1])


def normal_modes(system: StiffnessSystem, max_sweeps: int = 60,
                 tol: float = 1e-14) -> ModeBasis:
    """Diagonalize the assembled system.

    Deterministic output: frequencies ascend, and each mode vector has
    its largest-magnitude component (first such index on ties) positive.
    """
    m = system.mass_vector
    inv_sqrt_m = 1.0 / np.sqrt(m)
    a = system.stiffness_matrix * inv_sqrt_m[:, None] * inv_sqrt_m[None, :]
    a = 0.5 * (a + a.T)
    w, u, off, sweeps = _kernels.jacobi_eigh(a, max_sweeps, tol)
    norm = np.linalg.norm(a)
    if off > tol * max(norm, 1e-300):
        raise EigenSolverError(
            f"Jacobi did not converge in {sweeps} sweeps: "
            f"off-diagonal norm {off:.3e} vs target {tol * norm:.3e}")
    # eigenvalues below the solver's error floor are numerically zero;
    # without this, sqrt turns O(eps) residuals into O(1e-8) frequencies
    w[np.abs(w) < 1e-14 * norm] = 0.0
    omega = np.sqrt(np.clip(w, 0.0, None))
    order = np.argsort(omega, kind="stable")
    omega = omega[order]
    vectors = (u * inv_sqrt_m[:, None])[:, order]
    for col in range(vectors.shape[1]):
        idx = int(np.argmax(np.abs(vectors[:, col])))
        if vectors[idx, col] < 0:
            vectors[:, col] = -vectors[:, col]
    return ModeBasis(frequencies=omega, vectors=vectors)


# ---------------------------------------------------------------------------
# uniform-chain dispersion


def band_edge(k: float, m: float) -> float:
    """Top of the propagating band of the uniform unpinned chain."""
    return 2.0 * math.sqrt(k / m)


def chain_dispersion(k: float, m: float, q):
    """omega(q) = 2 sqrt(k/m) |sin(q/2)| for the infinite uniform chain."""
    _check_km(k, m)
    qa = np.asarray(q, dtype=float)
    if np.any(qa < 0.0) or np.any(qa > math.pi):
        raise ValueError(f"wavenumber must lie in [0, pi], got {q}")
    out = 2.0 * math.sqrt(k / m) * np.abs(np.sin(qa / 2.0))
    return float(out) if np.isscalar(q) else out


def group_velocity(k: float, m: float, q):
    """d omega / d q = sqrt(k/m) cos(q/2); zero at the band edge."""
    _check_km(k, m)
    qa = np.asarray(q, dtype=float)
    if np.any(qa <= 0.0) or np.any(qa > math.pi):
        raise ValueError(f"wavenumber must lie in (0, pi], got {q}")
    out = np.where(qa == math.pi, 0.0,
                   math.sqrt(k / m) * np.cos(qa / 2.0))
    return float(out) if np.isscalar(q) else out


def wavenumber_of(k: float, m: float, omega: float) -> float:
    """Inverse dispersion, omega in the open band -> q in (0, pi)."""
    _check_km(k, m)
    edge = band_edge(k, m)
    if not 0.0 < omega < edge:
        raise ValueError(
            f"omega={omega} outside the propagating band (0, {edge}); "
            "evanescent")
    return 2.0 * math.asin(omega / edge)


def _check_km(k, m):
    if k <= 0 or m <= 0:
        raise ValueError(f"chain parameters must be positive (k={k}, m={m})")


# ---------------------------------------------------------------------------
# side-branch scattering


@dataclass(frozen=True)
class ScatteringCoefficients:
    """Plane-wave reflection/transmission at the side-branch junction."""

    omega: float
    q: float
    r: complex
    s: complex

    @property
    def flux_error(self) -> float:
        return abs(abs(self.r) ** 2 + abs(self.s) ** 2 - 1.0)


def side_branch_response(K: float, M: float, omega: float) -> float:
    """Effective on-site response chi(omega) = K M omega^2 / (K - M omega^2).

    Diverges at the isolated cavity frequency sqrt(K/M) (math.inf is
    returned there; callers treat it as the hard-wall limit).
    """
    if M <= 0:
        raise ValueError(f"cavity mass must be positive, got {M}")
    if K < 0:
        raise ValueError(f"cavity spring must be non-negative, got {K}")
    if K == 0.0:
        return 0.0
    den = K - M * omega * omega
    if den == 0.0:
        return math.inf
    return K * M * omega * omega / den


def side_branch_scattering(k: float, m: float, K: float, M: float,
                           omega: float) -> ScatteringCoefficients:
    """Solve the monochromatic junction-matching problem.

    An incident unit plane wave on the infinite uniform chain meets one
    side-coupled oscillator; continuity plus the junction equation give
        s = 1 / (1 - i a),   r = s - 1,   a = chi / (2 k sin q),
    which conserves flux for every real chi.  At omega = sqrt(K/M) the
    branch blocks the chain completely: s = 0 and r = -1 (the same
    amplitude sign flip a hard wall produces).
    """
    q = wavenumber_of(k, m, omega)  # validates band and k, m
    chi = side_branch_response(K, M, omega)
    if chi == 0.0:
        return ScatteringCoefficients(omega=omega, q=q, r=0j, s=1 + 0j)
    if math.isinf(chi):
        return ScatteringCoefficients(omega=omega, q=q, r=-1 + 0j, s=0j)
    a = chi / (2.0 * k * math.sin(q))
    s = 1.0 / (1.0 - 1j * a)
    return ScatteringCoefficients(omega=omega, q=q, r=s - 1.0, s=s)


def transmission_phase(k: float, m: float, K: float, M: float,
                       omega: float) -> float:
    """arg s for the junction; undefined (ValueError) at the blocking
    frequency where |s| = 0."""
    coeff = side_branch_scattering(k, m, K, M, omega)
    if coeff.s == 0:
        raise ValueError("transmission zero: phase undefined at sqrt(K/M)")
    return cmath.phase(coeff.s)


def resonance_frequencies(ring_n: int, k: float, m: float, K: float,
                          M: float, grid_points: int = 4096,
                          tol: float = 1e-10) -> np.ndarray:
    """In-band frequencies where a pulse circulating the ring rebuilds
    constructively: ring_n * q(omega) + arg s(omega) == 0 (mod 2pi).

    Root finding: sign changes of sin(Phi) on a uniform frequency grid,
    keeping only crossings with cos(Phi) > 0 at both ends (a true
    multiple of 2pi, not the pi-jump at the transmission zero), then
    bisection to `tol` in omega.  K = 0 reduces to the bare ring modes.
    """
    if ring_n < 3:
        raise ValueError(f"ring_n must be >= 3, got {ring_n}")
    edge = band_edge(k, m)
    omegas = np.linspace(0.0, edge, grid_points + 2)[1:-1]

    def phase(w):
        q = 2.0 * math.asin(w / edge)
        chi = side_branch_response(K, M, w)
        if math.isinf(chi):
            return None
        a = chi / (2.0 * k * math.sin(q)) if chi != 0.0 else 0.0
        return ring_n * q + math.atan(a)

    omega_zero = math.sqrt(K / M) if K > 0 else None
    phi = np.array([phase(w) if phase(w) is not None else np.nan
                    for w in omegas])
    sin_phi = np.sin(phi)
    cos_phi = np.cos(phi)
    roots = []
    for i in range(len(omegas) - 1):
        lo, hi = omegas[i], omegas[i + 1]
        if omega_zero is not None and lo <= omega_zero <= hi:
            continue  # pi-jump interval, not a buildup point
        s0, s1 = sin_phi[i], sin_phi[i + 1]
        if not (np.isfinite(s0) and np.isfinite(s1)):
            continue
        if cos_phi[i] <= 0.0 or cos_phi[i + 1] <= 0.0:
            continue
        if s0 == 0.0:
            roots.append(lo)
            continue
        if s0 * s1 >= 0.0:
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            sm = math.sin(phase(mid))
            if sm == 0.0:
                lo = hi = mid
                break
            if s0 * sm < 0.0:
                hi = mid
            else:
                lo = mid
                s0 = sm
        roots.append(0.5 * (lo + hi))
    return np.array(sorted(set(roots)))
