"""Expected mass next to a crater on a cycle: simulation and the conditioned ODE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from ..engine import default_burn_in
from ..errors import InvalidSizeError, ValidationError
from ..graph import build_cycle, uniform_redistribution
from ..stats import Estimate, batch_means, ratio_batch_means
from .common import snapshot_run
from .report import Report, band, near, truth

LOWER, UPPER = 13.0 / 8.0, 5.0 / 3.0
REFERENCE = 1.6443


class IntegratorError(ValidationError):
    pass


def rim_height_mc(k: int, seed: int, burn_in: int | None = None, n_events: int = 4 * 10**7,
                  n_batches: int = 20) -> dict:
    """``E[M^2 | M^1 = 0]`` averaged over every crater of every snapshot of one trajectory.

    Also returns the unconditional neighbor mean as a baseline.
    """
    if k < 6:
        raise InvalidSizeError("rim height needs k >= 6")
    g = build_cycle(k)

    def observe(st):
        m = st.masses
        c = m == 0.0
        rim = (np.roll(m, 1)[c].sum() + np.roll(m, -1)[c].sum())
        return rim, 2.0 * c.sum(), m.mean()

    burn = default_burn_in(g) if burn_in is None else burn_in
    rows = snapshot_run(g, uniform_redistribution(g), seed, burn, n_events, k, observe)
    return {"rim": ratio_batch_means(rows[:, 0], rows[:, 1], n_batches),
            "neighbor_mean": batch_means(rows[:, 2], n_batches),
            "snapshots": rows.shape[0]}


@dataclass
class RimOdeState:
    """Per-site conditional expected mass ``F`` on a time grid.

    Site 0 is the crater, sites 1 and ``k-1`` its neighbors; sites
    ``2..k-2`` are hit at rate 1 and the three others never.
    """

    F: np.ndarray
    times: np.ndarray
    dt: float
    drift: float


def _rim_operator(k: int):
    hit = np.ones(k, dtype=bool)
    hit[[0, 1, k - 1]] = False
    left = np.roll(np.arange(k), 1)
    right = np.roll(np.arange(k), -1)

    def rhs(F):
        out = -F * hit
        Fh = F * hit
        out += 0.5 * Fh[left] + 0.5 * Fh[right]
        return out

    return rhs


def integrate_rim_system(k: int, horizon: float = 12.0, dt: float = 1e-3,
                         drift_tol: float = 1e-6) -> RimOdeState:
    """Classical RK4 on the full ``k``-site conditioned system; keeps the two rim sites only."""
    if k < 6:
        raise InvalidSizeError("rim system needs k >= 6")
    steps = int(round(horizon / dt))
    if steps < 2 or abs(steps * dt - horizon) > 1e-9 * horizon:
        raise ValidationError("horizon must be a multiple of dt")
    rhs = _rim_operator(k)
    F = np.ones(k)
    F[0] = 0.0
    F[1] = F[k - 1] = 1.5
    total0 = F.sum()
    out = np.empty((steps + 1, 2))
    out[0] = F[1], F[k - 1]
    drift = 0.0
    for i in range(steps):
        k1 = rhs(F)
        k2 = rhs(F + 0.5 * dt * k1)
        k3 = rhs(F + 0.5 * dt * k2)
        k4 = rhs(F + dt * k3)
        F = F + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = F[1], F[k - 1]
        drift = max(drift, abs(F.sum() - total0) / total0)
    if drift > drift_tol:
        raise IntegratorError(f"conservation drift {drift:.3g} exceeds {drift_tol:g}")
    return RimOdeState(out, np.linspace(0.0, horizon, steps + 1), dt, drift)


def rim_height_ode(k: int, horizon: float = 12.0, dt: float = 1e-3) -> float:
    """``int_0^horizon F_rim(s) 3 exp(-3 s) ds`` by Simpson's rule."""
    if horizon < 10:
        raise ValidationError("horizon must be at least 10")
    st = integrate_rim_system(k, horizon, dt)
    w = 3.0 * np.exp(-3.0 * st.times)
    return float(simpson(st.F[:, 0] * w, x=st.times))


def run_rim_height(seed: int, cfg: dict) -> Report:
    rep = Report("rim-height", cfg)
    k = int(cfg["k"])
    mc = rim_height_mc(k, seed, cfg.get("burn_in"), int(cfg["events"]))
    ode_k = min(k, int(cfg["ode_k"]))
    dt = float(cfg["dt"])
    ode = rim_height_ode(ode_k, float(cfg["horizon"]), dt)
    ode_half = rim_height_ode(ode_k, float(cfg["horizon"]), dt / 2)
    rim: Estimate = mc["rim"]
    rep.add(
        band("Monte Carlo rim height in (13/8, 5/3)", "rim height", rim, LOWER, UPPER, open_=True),
        near("Monte Carlo rim height within 0.012 of 1.6443", "rim height", rim, REFERENCE, 0.012),
        band("ODE rim height in (13/8, 5/3)", "rim height ODE", ode, LOWER, UPPER, open_=True),
        near("ODE and Monte Carlo agree within 0.01", "rim height ODE", ode, rim.mean, 0.01),
        truth("ODE result is dt-converged: halving dt moves it < 1e-6", "rim height ODE",
              abs(ode - ode_half) < 1e-6, abs(ode - ode_half)),
        near("baseline neighbor mean is 1", "stationary mean", mc["neighbor_mean"], 1.0,
             max(3 * mc["neighbor_mean"].stderr, 1e-9)),
    )
    rep.data = {"mc": mc, "ode": ode, "ode_half_dt": ode_half, "ode_k": ode_k}
    return rep
