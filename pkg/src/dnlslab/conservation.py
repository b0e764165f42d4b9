"""Polynomial conserved quantities and the elementary mass law.

    M  = int |q|^2
    H  = -1/2 int i (q qbar' - qbar q') + |q|^4
    H2 = int |q'|^2 + 3/4 i |q|^2 (q qbar' - qbar q') + 1/2 |q|^6

The microscopic mass law reads ``d/dt |q|^2 + d/dx [2 Im(q' qbar) + 3/2 |q|^4] = 0``.
"""

from __future__ import annotations

import numpy as np

from .grid import Field, spectral_derivative

__all__ = ["mass", "hamiltonian", "h2", "mass_flux", "micro_mass_residual"]


def mass(q: Field) -> float:
    return float(q.grid.dx * np.sum(np.abs(q.values) ** 2))


def hamiltonian(q: Field) -> float:
    v = q.values
    dv = spectral_derivative(q).values
    integrand = 1j * (v * np.conj(dv) - np.conj(v) * dv) + np.abs(v) ** 4
    return float(-0.5 * q.grid.dx * np.sum(integrand).real)


def h2(q: Field) -> float:
    v = q.values
    dv = spectral_derivative(q).values
    integrand = (
        np.abs(dv) ** 2
        + 0.75j * np.abs(v) ** 2 * (v * np.conj(dv) - np.conj(v) * dv)
        + 0.5 * np.abs(v) ** 6
    )
    return float(q.grid.dx * np.sum(integrand).real)


def mass_flux(q: Field) -> Field:
    """Flux ``2 Im(q' qbar) + 3/2 |q|^4`` of the mass density under the flow."""
    dv = spectral_derivative(q).values
    flux = 2.0 * np.imag(dv * np.conj(q.values)) + 1.5 * np.abs(q.values) ** 4
    return Field(q.grid, flux.astype(np.complex128))


def micro_mass_residual(traj) -> float:
    """Max interior residual of the mass law along a trajectory.

    The time derivative of |q|^2 uses second-order central differences on the
    stored snapshots (independent of the integrator's right-hand side); the
    flux divergence is spectral.  Normalized by the flux-divergence size.
    """
    times, fields = traj.times, traj.fields
    if len(fields) < 3:
        raise ValueError("need at least 3 uniformly spaced snapshots")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-10, atol=1e-14):
        raise ValueError("snapshots are not uniformly spaced in time")
    dt = steps[0]
    worst = 0.0
    for k in range(1, len(fields) - 1):
        rho_p = np.abs(fields[k + 1].values) ** 2
        rho_m = np.abs(fields[k - 1].values) ** 2
        drho_dt = (rho_p - rho_m) / (2.0 * dt)
        g = fields[k].grid
        flux = mass_flux(fields[k])
        div_flux = spectral_derivative(flux).values.real
        resid = float(np.sqrt(g.dx * np.sum((drho_dt + div_flux) ** 2)))
        scale = float(np.sqrt(g.dx * np.sum(np.abs(flux.values) ** 2)))
        worst = max(worst, resid / max(scale, 1e-300))
    return worst
