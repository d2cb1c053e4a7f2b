"""Minimizing movements outer loop for V = beta(nu) (kappa_sigma + f).

Each time step of size h:

1. redistance: w_m = signdist_beta {v_m <= 0} (optionally reusing v_m for a
   few steps),
2. resolvent: v_{m+1} = argmin (mu/2)||v - u_eff||^2 + ||sigma(grad v)||_1
   with mu = 1/h and u_eff = w_m - h*f_m, via warm-started split Bregman,
3. the new set is {v_{m+1} <= 0}.

The forcing sign is fixed so that f > 0 grows the set: enlarging E means
pushing v down, and the first-order optimality v = u_eff + h*div(z) shows
that u_eff must carry -h*f for that.

Extinction is declared when v_m > 0 everywhere and reported as the midpoint
of the two bracketing step times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .anisotropy import Anisotropy
from .bregman import (BregmanState, FdmDiscretization, FemDiscretization,
                      cahn_hoffman_residuals, default_eps_btol, solve_resolvent)
from .grid import Grid, KuhnMesh
from .redistance import signdist


@dataclass
class FlowConfig:
    sigma: Anisotropy
    beta: Anisotropy
    h: float
    m: int
    n: int
    discretization: str = "fdm"
    lam_ratio: float = 0.125
    eps_btol: float | None = None
    t_max: float = 0.1
    redistance_period: int = 1
    forcing: object = None          # f(points, t) -> node array, or None
    n_gs: int = 2
    max_iter: int = 5000
    check_optimality: bool = False

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError("time step h must be positive")
        if self.redistance_period < 1:
            raise ValueError("redistance_period must be at least 1")
        if self.discretization not in ("fdm", "fem"):
            raise ValueError(f"unknown discretization {self.discretization!r}")
        if self.eps_btol is None:
            self.eps_btol = default_eps_btol(self.n, self.m)

    @property
    def mu(self):
        return 1.0 / self.h

    @property
    def lam(self):
        return self.lam_ratio * self.mu


@dataclass
class StepDiagnostics:
    step: int
    iterations: int
    delta: float
    converged: bool
    polar_max: float = np.nan
    align_min: float = np.nan

    def logline(self):
        conv = "yes" if self.converged else "no"
        return (f"step {self.step} iters {self.iterations} "
                f"delta {self.delta:.2e} converged {conv}")


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)      # (t, v) pairs
    diagnostics: list = field(default_factory=list)
    events: list = field(default_factory=list)         # (name, t) pairs
    extinction_time: float | None = None
    worst_polar: float = 0.0
    worst_align: float = np.inf
    not_converged_steps: int = 0


class FlowRuntime:
    """Grid, mesh and solver state shared by the steps of one run."""

    def __init__(self, cfg: FlowConfig):
        self.cfg = cfg
        self.grid = Grid(cfg.n, cfg.m)
        self.mesh = KuhnMesh(self.grid)
        if cfg.discretization == "fem":
            self.disc = FemDiscretization(self.mesh)
        else:
            self.disc = FdmDiscretization(self.grid)
        self.state = BregmanState.cold(self.disc, cfg.mu, cfg.lam, cfg.eps_btol)
        self._points = None

    def points(self):
        if self._points is None:
            self._points = np.stack(self.grid.meshgrid(), axis=-1)
        return self._points

    def step(self, v, m):
        """One minimizing-movements step from v at step index m."""
        cfg = self.cfg
        if m % cfg.redistance_period == 0:
            w = signdist(v, self.mesh, cfg.beta)
        else:
            w = v
        u_eff = w
        if cfg.forcing is not None:
            f = np.asarray(cfg.forcing(self.points(), m * cfg.h), dtype=float)
            u_eff = w - cfg.h * f
        self.state.v = w.copy()
        solve_resolvent(u_eff, self.state, self.disc, cfg.sigma,
                        max_iter=cfg.max_iter, n_gs=cfg.n_gs)
        diag = StepDiagnostics(step=m, iterations=self.state.iterations_used,
                               delta=self.state.eps_btol, converged=self.state.converged)
        if cfg.check_optimality:
            diag.polar_max, diag.align_min = cahn_hoffman_residuals(self.state, cfg.sigma)
        return self.state.v.copy(), diag


def flow_step(v, state, cfg, m, runtime=None):
    """Single step (standalone form); returns (v_next, state, diagnostics)."""
    if runtime is None:
        runtime = FlowRuntime(cfg)
        runtime.state = state
    v_next, diag = runtime.step(v, m)
    return v_next, runtime.state, diag


def run_flow(v0, cfg: FlowConfig, snapshot_times=(), event_detectors=()):
    """Iterate flow steps up to t_max or extinction, recording snapshots.

    snapshot_times are rounded to the nearest step.  event_detectors is a
    sequence of (name, fn) with fn(v, t) -> bool; the first step where fn
    fires is recorded once per name.
    """
    runtime = FlowRuntime(cfg)
    traj = Trajectory()
    snap_steps = {}
    for t in snapshot_times:
        snap_steps.setdefault(int(round(t / cfg.h)), t)
    pending_events = dict(event_detectors)

    v = np.asarray(v0, dtype=float).copy()
    n_steps = int(round(cfg.t_max / cfg.h))
    m = 0
    if 0 in snap_steps:
        traj.snapshots.append((0.0, v.copy()))
        traj.times.append(0.0)
    while m < n_steps:
        if v.min() > 0.0:
            traj.extinction_time = (m - 0.5) * cfg.h if m > 0 else 0.0
            break
        v, diag = runtime.step(v, m)
        traj.diagnostics.append(diag)
        if not diag.converged:
            traj.not_converged_steps += 1
        if cfg.check_optimality:
            traj.worst_polar = max(traj.worst_polar, diag.polar_max)
            traj.worst_align = min(traj.worst_align, diag.align_min)
        m += 1
        t_now = m * cfg.h
        fired = []
        for name, fn in pending_events.items():
            if fn(v, t_now):
                traj.events.append((name, t_now))
                fired.append(name)
        for name in fired:
            del pending_events[name]
        if m in snap_steps:
            traj.snapshots.append((t_now, v.copy()))
            traj.times.append(t_now)
    else:
        if v.min() > 0.0 and traj.extinction_time is None:
            traj.extinction_time = (n_steps - 0.5) * cfg.h
    return traj
