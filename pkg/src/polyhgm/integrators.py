"""Explicit Runge-Kutta integrators for the linear path ODE on t in [0, 1].

``rhs(t, y)`` may raise ``SingularGram`` when the stage point is too close to
the singular locus; the step is then rejected and retried with a smaller step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MaxStepsExceeded, SingularGram, StepUnderflow

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class SolverConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    h_init: float = 1e-2
    h_min: float = 1e-12
    h_max: float = 0.25
    max_steps: int = 100_000
    scheme: str = "dopri5"  # or "rk4"

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not self.h_min <= self.h_init <= self.h_max:
            raise ValueError("need h_min <= h_init <= h_max")
        if self.scheme not in ("dopri5", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class Trajectory:
    y: np.ndarray
    steps: int
    rejections: int
    error_estimate: float  # sum of accepted local error norms
    ts: list
    ys: list


def _error_ratio(err, y0, y1, cfg) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale)) if err.size else 0.0


def _dopri_step(rhs, t, y, h, k1):
    k = [k1]
    for s in range(1, 7):
        ys = y + h * sum(a * ki for a, ki in zip(_A[s], k) if a != 0.0)
        k.append(rhs(t + _C[s] * h, ys))
    K = np.stack(k)
    y_new = y + h * (_B5 @ K)
    err = h * (_E @ K)
    return y_new, err, k[-1]


def _rk4_step(rhs, t, y, h, k1=None):
    if k1 is None:
        k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_ode(rhs, y0, cfg: SolverConfig, record: bool = False, t_end: float = 1.0) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from 0 to ``t_end``.

    ``dopri5`` adapts the step from the embedded error estimate.  ``rk4`` keeps
    the step ``h_init`` unless the step-doubling estimate (one full step
    against two half steps) exceeds the tolerance, in which case the step is
    halved; the two-half-step value is the one propagated.
    """
    y = np.array(y0, dtype=float)
    t = 0.0
    h = min(cfg.h_init, cfg.h_max)
    steps = rejections = 0
    err_total = 0.0
    ts, ys = ([0.0], [y.copy()]) if record else ([], [])
    k1 = None
    while t < t_end:
        if steps >= cfg.max_steps:
            raise MaxStepsExceeded(f"reached {cfg.max_steps} steps at t={t:.6g}")
        h = min(h, t_end - t)
        last = t + h >= t_end
        if h < cfg.h_min and not last:
            raise StepUnderflow(f"step {h:.3g} below h_min at t={t:.6g}")
        try:
            if cfg.scheme == "dopri5":
                if k1 is None:
                    k1 = rhs(t, y)
                y_new, err, k_last = _dopri_step(rhs, t, y, h, k1)
            else:
                full = _rk4_step(rhs, t, y, h)
                half = _rk4_step(rhs, t, y, h / 2)
                y_new = _rk4_step(rhs, t + h / 2, half, h / 2)
                err = (y_new - full) / 15
        except SingularGram:
            rejections += 1
            h /= 4
            if h < cfg.h_min:
                raise StepUnderflow(f"singular locus blocks progress at t={t:.6g}") from None
            continue
        ratio = _error_ratio(err, y, y_new, cfg)
        if not np.isfinite(ratio):
            ratio = np.inf
        if ratio <= 1.0:
            t = t_end if last else t + h
            y = y_new
            steps += 1
            err_total += float(np.max(np.abs(err), initial=0.0))
            if record:
                ts.append(t)
                ys.append(y.copy())
            if cfg.scheme == "dopri5":
                k1 = k_last  # first-same-as-last
                factor = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
                h = min(cfg.h_max, h * factor)
        else:
            rejections += 1
            if cfg.scheme == "dopri5":
                h *= max(0.1, 0.9 * ratio ** -0.2)
            else:
                h /= 2
            if h < cfg.h_min:
                raise StepUnderflow(f"step {h:.3g} below h_min at t={t:.6g}")
    return Trajectory(y, steps, rejections, err_total, ts, ys)


def rk4_fixed(rhs, y0, n_steps: int, t_end: float = 1.0) -> np.ndarray:
    """Classical RK4 with ``n_steps`` equal steps, no error control."""
    y = np.array(y0, dtype=float)
    h = t_end / n_steps
    for i in range(n_steps):
        y = _rk4_step(rhs, i * h, y, h)
    return y
