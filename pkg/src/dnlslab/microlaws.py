"""Microscopic conservation laws built from the diagonal Green's functions.

Density and currents (w = g/(2+gamma) denotes the fraction fields):

    rho(vk)    = q i g21/(sqrt(vk)(2+gamma)) + qbar g12/(sqrt(vk)(2+gamma))

    j_dnls(vk) = w21/sqrt(vk) (2 vk + d + i|q|^2) q
                 - i w12/sqrt(vk) (2 vk - d + i|q|^2) qbar + i |q|^2

    j_diff(vk, k) = w21(vk)/sqrt(vk) [ (2 vk + d + i|q|^2) q
                        - 2 k^(5/2) ( g12(k)/(k - vk) - i g12(-k)/(k + vk) ) ]
                  - i w12(vk)/sqrt(vk) [ (2 vk - d + i|q|^2) qbar
                        - 2 k^(5/2) ( g21(-k)/(k + vk) + i g21(k)/(k - vk) ) ]
                  + i |q|^2 - k^2 gamma(k)/(k - vk) + k^2 gamma(-k)/(k + vk)

Along the cubic flow  d/dt rho(vk) + d/dx j_dnls(vk) = 0; along the
difference flow generated by H - H_kappa the current is j_diff(vk, kappa).
Green data at -kappa comes from the conjugation symmetry (cross-checked
against a fresh build once per residual evaluation).
"""

from __future__ import annotations

import numpy as np

from .grid import Field, l2_norm, spectral_derivative
from .green import GreenTriple, green_diagonal, triple_at_minus_kappa
from .operators import _as_param

__all__ = ["rho", "j_dnls", "j_diff", "micro_residual"]

MIN_TWO_PLUS_GAMMA = 0.5


def _guard(t: GreenTriple) -> None:
    m = t.min_two_plus_gamma()
    if m < MIN_TWO_PLUS_GAMMA:
        raise ValueError(
            f"|2 + gamma| dipped to {m:.3f} < {MIN_TWO_PLUS_GAMMA}; outside the validity regime"
        )


def rho(vkappa, q: Field, triple: GreenTriple | None = None) -> Field:
    """Conserved density rho(vkappa; q)."""
    p = _as_param(vkappa)
    t = triple if triple is not None else green_diagonal(p, q)
    _guard(t)
    sk = p.sqrt_kappa
    den = sk * (2.0 + t.gamma.values)
    vals = q.values * 1j * t.g21.values / den + np.conj(q.values) * t.g12.values / den
    return Field(q.grid, vals)


def _dnls_current_core(p, q: Field, t: GreenTriple, form: int) -> np.ndarray:
    _guard(t)
    sk = p.sqrt_kappa
    qv = q.values
    qb = np.conj(qv)
    dq = spectral_derivative(q).values
    dqb = np.conj(dq)
    absq2 = np.abs(qv) ** 2
    w12 = t.w12.values
    w21 = t.w21.values
    if form == 2:
        return (
            (w21 / sk) * (2.0 * p.kappa * qv + dq + 1j * absq2 * qv)
            - 1j * (w12 / sk) * (2.0 * p.kappa * qb - dqb + 1j * absq2 * qb)
            + 1j * absq2
        )
    if form == 1:
        r = rho(p, q, triple=t).values
        return (
            (absq2 - 2j * p.kappa) * r
            + (dq * t.g21.values + 1j * dqb * t.g12.values) / (sk * (2.0 + t.gamma.values))
            + 1j * absq2
        )
    raise ValueError("form must be 1 or 2")


def j_dnls(vkappa, q: Field, triple: GreenTriple | None = None, form: int = 2) -> Field:
    """Current of rho(vkappa) under the cubic flow (two equal printed forms)."""
    p = _as_param(vkappa)
    t = triple if triple is not None else green_diagonal(p, q)
    return Field(q.grid, _dnls_current_core(p, q, t, form))


def j_diff(
    vkappa,
    kappa,
    q: Field,
    triple_vk: GreenTriple | None = None,
    triple_k: GreenTriple | None = None,
    triple_mk: GreenTriple | None = None,
) -> Field:
    """Current of rho(vkappa) under the difference flow of parameter kappa."""
    pv = _as_param(vkappa)
    pk = _as_param(kappa)
    if abs(abs(pv.kappa) - abs(pk.kappa)) < 1e-12:
        raise ValueError("the current has a pole at vkappa = +/- kappa")
    tv = triple_vk if triple_vk is not None else green_diagonal(pv, q)
    tk = triple_k if triple_k is not None else green_diagonal(pk, q)
    tm = triple_mk if triple_mk is not None else triple_at_minus_kappa(tk)
    _guard(tv)
    sk = pv.sqrt_kappa
    k = pk.kappa
    vk = pv.kappa
    qv = q.values
    qb = np.conj(qv)
    dq = spectral_derivative(q).values
    absq2 = np.abs(qv) ** 2
    k52 = k**2 * pk.sqrt_kappa
    w12 = tv.w12.values
    w21 = tv.w21.values
    bracket_q = (
        2.0 * vk * qv
        + dq
        + 1j * absq2 * qv
        - 2.0 * k52 * (tk.g12.values / (k - vk) - 1j * tm.g12.values / (k + vk))
    )
    bracket_qb = (
        2.0 * vk * qb
        - np.conj(dq)
        + 1j * absq2 * qb
        - 2.0 * k52 * (tm.g21.values / (k + vk) + 1j * tk.g21.values / (k - vk))
    )
    vals = (
        (w21 / sk) * bracket_q
        - 1j * (w12 / sk) * bracket_qb
        + 1j * absq2
        - k**2 * tk.gamma.values / (k - vk)
        + k**2 * tm.gamma.values / (k + vk)
    )
    return Field(q.grid, vals)


def micro_residual(traj, vkappa, flow_kind: str, force: bool = False) -> float:
    """Normalized max residual of d/dt rho + d/dx j along a trajectory.

    ``flow_kind`` is "dnls" or "diff"; it must match the trajectory metadata
    unless ``force`` is set (deliberate wrong-flow detection experiments).
    The time derivative uses central differences of the snapshot densities,
    so the result is limited by the snapshot spacing.  The symmetry shortcut
    for the -kappa Green data is cross-checked against a fresh build at the
    first interior snapshot.
    """
    pv = _as_param(vkappa)
    kind = traj.spec.kind
    if not force and kind != flow_kind:
        raise ValueError(
            f"flow_kind {flow_kind!r} does not match trajectory kind {kind!r} "
            "(pass force=True for deliberate cross-checks)"
        )
    if len(traj.fields) < 3:
        raise ValueError("need at least 3 uniformly spaced snapshots")
    dt = traj.times[1] - traj.times[0]
    if flow_kind == "diff":
        pk = _as_param(float(traj.spec.kappa)) if traj.spec.kappa is not None else None
        if pk is None:
            raise ValueError("difference-flow residual requires the trajectory's kappa")

    rhos = []
    for f in traj.fields:
        rhos.append(rho(pv, f).values)

    worst = 0.0
    checked_symmetry = False
    for i in range(1, len(traj.fields) - 1):
        f = traj.fields[i]
        tv = green_diagonal(pv, f)
        if flow_kind == "dnls":
            cur = j_dnls(pv, f, triple=tv)
        else:
            tk = green_diagonal(pk, f)
            tm = triple_at_minus_kappa(tk)
            if not checked_symmetry:
                fresh = green_diagonal(-pk.kappa, f)
                gap = l2_norm(fresh.g12 - tm.g12) / max(l2_norm(tm.g12), 1e-300)
                if gap > 1e-9:
                    raise RuntimeError(f"conjugation-symmetry shortcut off by {gap:.2e}")
                checked_symmetry = True
            cur = j_diff(pv, pk, f, triple_vk=tv, triple_k=tk, triple_mk=tm)
        drho = (rhos[i + 1] - rhos[i - 1]) / (2.0 * dt)
        div_j = spectral_derivative(cur).values
        g = f.grid
        resid = float(np.sqrt(g.dx * np.sum(np.abs(drho + div_j) ** 2)))
        scale = max(float(np.sqrt(g.dx * np.sum(np.abs(cur.values) ** 2))), 1e-300)
        worst = max(worst, resid / scale)
    return worst
