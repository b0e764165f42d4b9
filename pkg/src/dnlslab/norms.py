"""Weighted norm families, equicontinuity/tightness diagnostics, and the two
soliton-driven counterexample experiments.

The localizing weight is ``psi(x) = sqrt(sech(x/99))`` with translates
``psi_mu = psi(x - mu)``; the normalization ``int psi_mu^24 dmu = 512/7``
holds for every x.  Norm families:

    E:  ||q||^2 = int kappa^(2(s-sigma)) |xi|^(2 sigma) / (4 kappa^2 + xi^2)^s |qhat|^2
    B:  ||f||   = ||f||_Linf + sup_N N^(1/2) ||P_N f||_L2
    F:  ||q||^2 = int || psi_mu^12 q / sqrt(4 kappa^2 - d^2) ||_{H^(s+1)}^2
                  e^(-|h - mu|/200) dmu
    X:  ||q||^2 = sup_h int_time ||q(t)||_{F_kappa^s(h)}^2 dt

mu-quadratures run at unit spacing over the box extended by a margin wide
enough for the psi tails (the weights vary on scales 99 and 200, so unit
spacing over-resolves).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, forward, l2_norm, littlewood_paley, lp_frequencies, lp_low_block

__all__ = [
    "WeightProfile",
    "EnsembleQ",
    "psi_power",
    "sech12_weight",
    "psi_mu_integral_check",
    "e_norm",
    "b_norm",
    "f_norm",
    "x_norm",
    "x_norm_alt",
    "equicontinuity_modulus",
    "tightness_tail",
    "no_smoothing_scan",
    "gronwall_scan",
]

MU_MARGIN = 300.0  # covers the psi^12 tail: sech^6(300/99) ~ 1e-6 squared below 1e-12


def psi_power(g: Grid, mu: float, power: int) -> np.ndarray:
    """Samples of psi_mu^power = sech((x - mu)/99)^(power/2)."""
    if not (1 <= power <= 24):
        raise ValueError("weight power must lie in [1, 24]")
    return (1.0 / np.cosh((g.x - mu) / 99.0)) ** (0.5 * power)


def sech12_weight(g: Grid) -> np.ndarray:
    """The sech^12(x) weight of the no-smoothing experiment (unit length scale)."""
    return (1.0 / np.cosh(g.x)) ** 12


@dataclass(frozen=True)
class WeightProfile:
    """Translated localizing weight psi_mu^power on a grid."""

    grid: Grid
    mu: float
    power: int

    def samples(self) -> np.ndarray:
        return psi_power(self.grid, self.mu, self.power)


@dataclass(frozen=True)
class EnsembleQ:
    """A candidate bounded/equicontinuous family of fields on a shared grid."""

    members: tuple

    def __post_init__(self) -> None:
        if len(self.members) == 0:
            raise ValueError("ensemble is empty")
        g = self.members[0].grid
        for f in self.members:
            if f.grid != g:
                raise ValueError("ensemble members live on different grids")

    @property
    def grid(self) -> Grid:
        return self.members[0].grid


def _mu_grid(g: Grid, spacing: float = 1.0, margin: float = MU_MARGIN) -> np.ndarray:
    half = 0.5 * g.length + margin
    return np.arange(-half, half + 1e-9, spacing)


def psi_mu_integral_check(g: Grid, x_probe=None, spacing: float = 1.0) -> float:
    """Max deviation of the mu-quadrature of psi_mu^24 from 512/7 over probe points."""
    if x_probe is None:
        x_probe = np.array([0.0, -0.25 * g.length, 0.4 * g.length])
    mus = _mu_grid(g, spacing)
    worst = 0.0
    for x in x_probe:
        total = spacing * np.sum((1.0 / np.cosh((x - mus) / 99.0)) ** 12)
        worst = max(worst, abs(total - 512.0 / 7.0))
    return worst


# ---------------------------------------------------------------------------
# Norm families
# ---------------------------------------------------------------------------


def e_norm(q: Field, s: float, sigma: float, kappa: float) -> float:
    """Equicontinuity norm of the E family."""
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    qhat = forward(q)
    xi = q.grid.xi
    w = kappa ** (2.0 * (s - sigma)) * np.abs(xi) ** (2.0 * sigma) / (4.0 * kappa**2 + xi**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(qhat) ** 2) / q.grid.length))


def b_norm(f: Field) -> float:
    """Sup norm plus the worst dyadic-block L2 norm weighted by N^(1/2)."""
    best = 0.0
    for N in lp_frequencies(f.grid):
        best = max(best, np.sqrt(N) * l2_norm(littlewood_paley(f, N)))
    N_low = lp_frequencies(f.grid)[0]
    best = max(best, np.sqrt(N_low) * l2_norm(lp_low_block(f)))
    return float(np.max(np.abs(f.values)) + best)


def _f_norm_integrand(q: Field, kappa: float, s: float, mu: float) -> float:
    g = q.grid
    w = psi_power(g, mu, 12)
    loc = np.fft.fft(w * q.values)
    sym = (4.0 + g.xi**2) ** (s + 1.0) / (4.0 * kappa**2 + g.xi**2)
    vals = np.fft.ifft(np.sqrt(sym) * loc)
    return float(g.dx * np.sum(np.abs(vals) ** 2))


def f_norm(q: Field, kappa: float, s: float = 0.5, h: float = 0.0, spacing: float = 1.0) -> float:
    """Localized smoothing norm F_kappa^s(h) by mu-quadrature."""
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    mus = _mu_grid(q.grid, spacing)
    total = 0.0
    for mu in mus:
        total += np.exp(-abs(h - mu) / 200.0) * _f_norm_integrand(q, kappa, s, mu)
    return float(np.sqrt(spacing * total))


def x_norm(traj, kappa: float, s: float = 0.5, spacing: float = 1.0, h_values=None) -> float:
    """Spacetime norm: sup over h of the time integral of F_kappa^s(h)^2.

    The time window is the trajectory's span (reported by the caller when it
    differs from the unit window).
    """
    g = traj.grid
    mus = _mu_grid(g, spacing)
    times = traj.times
    # time integral of the mu-integrand, then the h-weighted sup
    per_mu = np.zeros(len(mus))
    for j, mu in enumerate(mus):
        vals = [_f_norm_integrand(f, kappa, s, mu) for f in traj.fields]
        per_mu[j] = np.trapezoid(vals, times)
    if h_values is None:
        h_values = np.arange(-0.5 * g.length, 0.5 * g.length + 1e-9, spacing)
    best = 0.0
    for h in h_values:
        best = max(best, spacing * float(np.sum(np.exp(-np.abs(h - mus) / 200.0) * per_mu)))
    return float(np.sqrt(best))


def x_norm_alt(traj, kappa: float, spacing: float = 1.0) -> float:
    """Alternative characterization: sup_mu of the time-integrated H^(3/2) norm
    of psi_mu^12 q / sqrt(4 kappa^2 - d^2) (equivalent to x_norm at s = 1/2)."""
    g = traj.grid
    mus = _mu_grid(g, spacing)
    best = 0.0
    for mu in mus:
        vals = [_f_norm_integrand(f, kappa, 0.5, mu) for f in traj.fields]
        best = max(best, float(np.trapezoid(vals, traj.times)))
    return float(np.sqrt(best))


# ---------------------------------------------------------------------------
# Equicontinuity and tightness diagnostics
# ---------------------------------------------------------------------------


def equicontinuity_modulus(Q: EnsembleQ, shifts) -> dict:
    """sup over members of || q(x + y) - q(x) ||_L2 for each shift y."""
    g = Q.grid
    out = {}
    for y in shifts:
        steps = y / g.dx
        worst = 0.0
        for f in Q.members:
            if abs(steps - round(steps)) < 1e-9:
                shifted = np.roll(f.values, -int(round(steps)))
            else:
                fh = forward(f)
                shifted = (
                    np.fft.ifft(np.exp(1j * g.xi * y) * g._signs * fh) / g.dx
                )
            worst = max(worst, float(np.sqrt(g.dx * np.sum(np.abs(shifted - f.values) ** 2))))
        out[float(y)] = worst
    return out


def tightness_tail(Q: EnsembleQ, R: float) -> float:
    """sup over members of the mass outside [-R, R]."""
    g = Q.grid
    outside = np.abs(g.x) >= R
    return max(float(g.dx * np.sum(np.abs(f.values[outside]) ** 2)) for f in Q.members)


# ---------------------------------------------------------------------------
# Counterexample experiments
# ---------------------------------------------------------------------------


def _h_half_weighted(q: Field, weight: np.ndarray) -> float:
    """Squared H^(1/2) norm of weight * q, via the (4 + xi^2)^(1/4) multiplier."""
    g = q.grid
    wh = np.fft.fft(weight * q.values)
    sym = np.sqrt(np.sqrt(4.0 + g.xi**2))
    vals = np.fft.ifft(sym * wh)
    return float(g.dx * np.sum(np.abs(vals) ** 2))


def _no_smoothing_resolution(lam: float) -> tuple[int, float]:
    """Grid (n, length) resolving the lam-rescaled stationary soliton."""
    length = 64.0
    # spectrum decays like exp(-pi |xi| / (4 lam)); resolve to ~1e-12
    xi_need = 40.0 * lam
    n = 2 ** int(np.ceil(np.log2(length * xi_need / np.pi)))
    return max(n, 1024), length


def no_smoothing_scan(lambdas, dt0: float = 4e-4, record_every: int = 50) -> dict:
    """Weighted local-smoothing mass of rescaled stationary solitons.

    For each lam (a power of two) the rescaled stationary soliton is evolved
    over [-1, 1] under the cubic flow and the table records

        value(lam) = int_{-1}^{1} || sech^12(x) q(t) ||_{H^(1/2)}^2 dt

    together with the worst mass deviation from 2 pi.  The proposition's
    content is near-linear growth of value(lam).
    """
    from .flows import FlowSpec, evolve
    from .solitons import SolitonParams, soliton_at

    rows = []
    for lam in lambdas:
        k = np.log2(lam)
        if abs(k - round(k)) > 1e-12:
            raise ValueError(f"lambda must be a power of two, got {lam}")
        n, length = _no_smoothing_resolution(lam)
        if n > 2**16:
            raise ValueError(
                f"resolution insufficient for lambda={lam}: would need n={n} > 65536"
            )
        from .grid import make_grid

        g = make_grid(n, length)
        p = SolitonParams(theta=np.pi / 4, lam=lam)
        q_init = soliton_at(p, -1.0, g)
        dt = dt0 / lam**2
        spec = FlowSpec("dnls", dt, 2.0, record_every=record_every)
        traj = evolve(spec, q_init)
        w = sech12_weight(g)
        vals = [_h_half_weighted(f, w) for f in traj.fields]
        value = float(np.trapezoid(vals, traj.times))
        mass_dev = float(np.max(np.abs(np.array(traj.diagnostics["mass"]) - 2.0 * np.pi)))
        rows.append({"lam": float(lam), "value": value, "mass_deviation": mass_dev, "n": n})
    ratios = [
        rows[i + 1]["value"] / rows[i]["value"] if rows[i]["value"] > 0 else np.inf
        for i in range(len(rows) - 1)
    ]
    return {"rows": rows, "doubling_ratios": ratios}


def gronwall_scan(theta_n, lambda_pairs, t_n, s: float = 0.0, n: int = 2048, length: float = 96.0) -> dict:
    """Growth of the H^s distance ratio for soliton pairs traveling apart.

    Uses the closed-form soliton family (no integration).  Each row holds
    ``|| q_n(t_n) - qtil_n(t_n) ||_{H^s} / || q_n(0) - qtil_n(0) ||_{H^s}``;
    the instability shows as a strictly increasing ratio column when
    ``|lam - lamtil| cot(2 theta_n) t_n`` diverges.
    """
    from .grid import make_grid, sobolev_norm
    from .solitons import SolitonParams, soliton_at

    if s > 0:
        raise ValueError("the comparison runs at s <= 0")
    g = make_grid(n, length)
    rows = []
    for theta, (lam, lam_t), t in zip(theta_n, lambda_pairs, t_n):
        if lam == lam_t:
            rows.append({"theta": theta, "lam": lam, "lam_t": lam_t, "t": t, "ratio": None,
                         "excluded": "identical pair (0/0)"})
            continue
        if abs(lam - lam_t) > 0.5 * lam:
            raise ValueError("parameters violate the regime |lam - lamtil| << lam")
        pa = SolitonParams(theta=theta, lam=lam)
        pb = SolitonParams(theta=theta, lam=lam_t)
        d0 = sobolev_norm(soliton_at(pa, 0.0, g, decay_tol=1e-9) - soliton_at(pb, 0.0, g, decay_tol=1e-9), s)
        dT = sobolev_norm(soliton_at(pa, t, g, decay_tol=1e-9) - soliton_at(pb, t, g, decay_tol=1e-9), s)
        cot2t = np.cos(2 * theta) / np.sin(2 * theta)
        rows.append(
            {
                "theta": float(theta),
                "lam": float(lam),
                "lam_t": float(lam_t),
                "t": float(t),
                "separation_parameter": float(abs(lam - lam_t) * cot2t * t),
                "ratio": float(dT / d0),
            }
        )
    ratios = [r["ratio"] for r in rows if r["ratio"] is not None]
    return {
        "rows": rows,
        "strictly_increasing": all(b > a for a, b in zip(ratios, ratios[1:])),
    }
