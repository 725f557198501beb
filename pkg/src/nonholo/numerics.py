"""Integration and measure-verification tools on flat coordinate charts.

A "field" here is a callable mapping flat coordinates (..., d) to time
derivatives (..., d); it must broadcast over leading batch dimensions so
that finite-difference Jacobians can be evaluated in one vectorized call.

Two verification primitives are provided:

* ``liouville_residual_ambient``: pointwise div(X) + d/dt log(mu) on a full
  linear chart, with the divergence taken from a central finite-difference
  Jacobian (deliberately independent of any closed-form divergence).

* ``tangent_volume_transport``: propagates an orthonormal basis of the
  constraint-manifold tangent space with the variational equation
  dV/dt = J(x(t)) V and accumulates the log volume of the transported
  parallelepiped; for an invariant measure mu the sum
  log mu(x(t)) + log vol(V(t)) stays constant.

The default integrator is an embedded Dormand-Prince 5(4) pair with a
proportional step controller; a fixed-step classical RK4 is available for
convergence studies.  Both are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstraintDriftError,
    IntegrationAbort,
    NonholoError,
    ParameterError,
    SingularityError,
    StiffnessError,
)

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "TransportResult",
    "rk4_step",
    "integrate",
    "fd_jacobian",
    "fd_gradient",
    "divergence",
    "liouville_residual_ambient",
    "constraint_tangent_basis",
    "tangent_volume_transport",
    "polar_orthonormalize",
    "skew_symmetrize",
    "renormalize",
]

_FD_H = float(np.finfo(float).eps) ** (1.0 / 3.0)


# ---------------------------------------------------------------------------
# steppers


def rk4_step(f, x, dt):
    """One classical fourth-order Runge-Kutta step for autonomous f."""
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(f(x))
    k2 = np.asarray(f(x + 0.5 * dt * k1))
    k3 = np.asarray(f(x + 0.5 * dt * k2))
    k4 = np.asarray(f(x + dt * k3))
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_BHAT = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B - _DP_BHAT


@dataclass
class IntegratorConfig:
    """Settings for ``integrate``.

    method is "embedded_adaptive" (Dormand-Prince 5(4), default) or
    "rk4_fixed" (requires dt).  samples is the number of equally spaced
    output times on [0, t_end] including both ends.  renormalize_every
    applies a chart renormalization after that many accepted steps; it is
    disabled by default and must stay disabled during measure checks.
    """

    method: str = "embedded_adaptive"
    t_end: float = 5.0
    dt: float | None = None
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    samples: int = 33
    max_steps: int = 2_000_000
    renormalize_every: int | None = None

    def __post_init__(self):
        if self.method not in ("embedded_adaptive", "rk4_fixed"):
            raise ParameterError(f"unknown integrator method {self.method!r}")
        if self.method == "rk4_fixed" and (self.dt is None or self.dt <= 0.0):
            raise ParameterError("rk4_fixed requires a positive dt")
        if self.abs_tol <= 0.0 or self.rel_tol < 0.0:
            raise ParameterError("tolerances must be positive")
        if self.t_end < 0.0:
            raise ParameterError("t_end must be nonnegative")
        if self.samples < 1:
            raise ParameterError("need at least one sample")

    def sample_times(self) -> np.ndarray:
        if self.samples == 1 or self.t_end == 0.0:
            return np.array([0.0])
        return np.linspace(0.0, self.t_end, self.samples)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    observations: dict = field(default_factory=dict)


class _AdaptiveDriver:
    """Dormand-Prince 5(4) stepping between target times, FSAL reused."""

    def __init__(self, f, x, cfg):
        self.f = f
        self.x = np.asarray(x, dtype=float).copy()
        self.cfg = cfg
        self.t = 0.0
        self.h = None
        self.f0 = None
        self.steps = 0
        self.accepted_since_renorm = 0

    def _eval(self, x):
        try:
            return np.asarray(self.f(x), dtype=float)
        except NonholoError as exc:
            raise IntegrationAbort(self.t, exc) from exc

    def _initial_h(self, span):
        sc = self.cfg.abs_tol + self.cfg.rel_tol * np.abs(self.x)
        d0 = float(np.sqrt(np.mean((self.x / sc) ** 2)))
        d1 = float(np.sqrt(np.mean((self.f0 / sc) ** 2)))
        h = 0.01 * d0 / d1 if d1 > 1e-12 and d0 > 1e-12 else 1e-3 * span
        return min(max(h, 1e-8 * span), span)

    def advance(self, t_target, on_accept=None):
        cfg = self.cfg
        if self.f0 is None:
            self.f0 = self._eval(self.x)
        if self.h is None:
            self.h = self._initial_h(max(t_target - self.t, 1e-12))
        while self.t < t_target - 1e-14 * max(1.0, abs(t_target)):
            if self.f0 is None:  # FSAL value dropped by a renormalization
                self.f0 = self._eval(self.x)
            if self.steps >= cfg.max_steps:
                raise IntegrationAbort(self.t, "max_steps exceeded")
            h = min(self.h, t_target - self.t)
            if h < 1e-14 * max(1.0, abs(self.t)):
                raise StiffnessError(
                    f"step size underflow at t={self.t:.6g} (h={h:.3e})"
                )
            k = [self.f0]
            for i in range(1, 7):
                xi = self.x + h * np.tensordot(_DP_A[i], np.array(k[:i]), axes=(0, 0))
                k.append(self._eval(xi))
            karr = np.array(k)
            x_new = self.x + h * np.tensordot(_DP_B, karr, axes=(0, 0))
            err = h * np.tensordot(_DP_E, karr, axes=(0, 0))
            sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(self.x), np.abs(x_new))
            err_norm = float(np.sqrt(np.mean((err / sc) ** 2)))
            self.steps += 1
            if err_norm <= 1.0:
                self.t += h
                self.x = x_new
                self.f0 = k[6]  # FSAL: last stage is f at the accepted point
                self.accepted_since_renorm += 1
                if on_accept is not None:
                    on_accept(self)
                factor = 5.0 if err_norm == 0.0 else min(
                    5.0, max(0.2, 0.9 * err_norm ** -0.2)
                )
            else:
                factor = max(0.2, 0.9 * err_norm ** -0.2)
            self.h = h * factor
        return self.x

    def reset_fsal(self):
        self.f0 = None


class _FixedDriver:
    """Classical RK4 with a fixed step, shortened to hit target times."""

    def __init__(self, f, x, cfg):
        self.f = f
        self.x = np.asarray(x, dtype=float).copy()
        self.cfg = cfg
        self.t = 0.0
        self.steps = 0
        self.accepted_since_renorm = 0

    def advance(self, t_target, on_accept=None):
        dt = self.cfg.dt
        while self.t < t_target - 1e-14 * max(1.0, abs(t_target)):
            if self.steps >= self.cfg.max_steps:
                raise IntegrationAbort(self.t, "max_steps exceeded")
            h = min(dt, t_target - self.t)
            try:
                self.x = rk4_step(self.f, self.x, h)
            except NonholoError as exc:
                raise IntegrationAbort(self.t, exc) from exc
            self.t += h
            self.steps += 1
            self.accepted_since_renorm += 1
            if on_accept is not None:
                on_accept(self)
        return self.x

    def reset_fsal(self):
        pass


def _make_driver(f, x0, cfg):
    if cfg.method == "rk4_fixed":
        return _FixedDriver(f, x0, cfg)
    return _AdaptiveDriver(f, x0, cfg)


def integrate(field_fn, x0, cfg: IntegratorConfig, observers=None, renormalize_fn=None):
    """Integrate dx/dt = field_fn(x) and sample at cfg.sample_times().

    observers maps names to callables (t, x) -> scalar or array, evaluated
    at every sample time.  renormalize_fn, if given together with
    cfg.renormalize_every, projects the state back onto its manifold after
    that many accepted steps.
    """
    x0 = np.asarray(x0, dtype=float)
    times = cfg.sample_times()
    driver = _make_driver(field_fn, x0, cfg)

    every = cfg.renormalize_every

    def on_accept(drv):
        if renormalize_fn is not None and every and drv.accepted_since_renorm >= every:
            drv.x = np.asarray(renormalize_fn(drv.x), dtype=float)
            drv.accepted_since_renorm = 0
            drv.reset_fsal()

    states = [driver.x.copy()]
    obs = {name: [fn(0.0, driver.x)] for name, fn in (observers or {}).items()}
    for t in times[1:]:
        driver.advance(float(t), on_accept=on_accept)
        states.append(driver.x.copy())
        for name, fn in (observers or {}).items():
            obs[name].append(fn(float(t), driver.x))
    return Trajectory(
        times=times,
        states=np.array(states),
        observations={k: np.array(v) for k, v in obs.items()},
    )


# ---------------------------------------------------------------------------
# finite differences


def _fd_points(x, h_scale):
    d = x.size
    h = h_scale * np.maximum(1.0, np.abs(x))
    pts = np.concatenate([x + np.diag(h), x - np.diag(h)], axis=0)
    return pts, h


def fd_jacobian(fn, x, h_scale: float | None = None) -> np.ndarray:
    """Central finite-difference Jacobian of fn at x, shape (m, d).

    The step along coordinate i is h_scale * max(1, |x_i|) with
    h_scale = eps**(1/3) by default.  fn is called once on a stacked batch
    of 2d points; if it cannot broadcast, it is called row by row.
    """
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    if h_scale is None:
        h_scale = _FD_H
    pts, h = _fd_points(x, h_scale)
    vals = None
    try:
        out = np.asarray(fn(pts), dtype=float)
        if out.ndim == 2 and out.shape[0] == 2 * d:
            vals = out
    except NonholoError:
        raise
    except Exception:
        vals = None
    if vals is None:
        vals = np.array([np.asarray(fn(p), dtype=float).ravel() for p in pts])
    diff = (vals[:d] - vals[d:]) / (2.0 * h[:, None])
    return diff.T


def fd_gradient(fn, x, h_scale: float | None = None) -> np.ndarray:
    """Central finite-difference gradient of scalar fn at x."""
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    if h_scale is None:
        h_scale = _FD_H
    pts, h = _fd_points(x, h_scale)
    vals = None
    try:
        out = np.asarray(fn(pts), dtype=float)
        if out.shape == (2 * d,):
            vals = out
    except NonholoError:
        raise
    except Exception:
        vals = None
    if vals is None:
        vals = np.array([float(fn(p)) for p in pts])
    return (vals[:d] - vals[d:]) / (2.0 * h)


def divergence(field_fn, x, h_scale: float | None = None) -> float:
    """Trace of the finite-difference Jacobian of the field at x."""
    return float(np.trace(fd_jacobian(field_fn, x, h_scale)))


def liouville_residual_ambient(field_fn, log_density_fn, x) -> float:
    """div(X)(x) + <grad log mu, X>(x) on a full linear chart.

    Vanishes identically when mu is the density of an invariant measure in
    these coordinates.  Both terms come from central finite differences, so
    the residual is independent of any closed-form divergence.
    """
    x = np.asarray(x, dtype=float).ravel()
    div = divergence(field_fn, x)
    grad = fd_gradient(log_density_fn, x)
    fx = np.asarray(field_fn(x), dtype=float).ravel()
    return float(div + grad @ fx)


# ---------------------------------------------------------------------------
# constrained volume transport


def constraint_tangent_basis(constraints_fn, x, rel_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (d, q) of the null space of the constraint Jacobian."""
    x = np.asarray(x, dtype=float).ravel()
    jac = fd_jacobian(constraints_fn, x)
    _, s, vt = np.linalg.svd(jac)
    if s.size:
        rank = int(np.sum(s > rel_tol * s[0]))
    else:
        rank = 0
    basis = vt[rank:].T
    if basis.shape[1] == 0:
        raise SingularityError("constraints leave no tangent directions")
    return basis


@dataclass
class TransportResult:
    """Sampled log-density, transported log-volume, and their combined drift.

    residual[i] = (log_density + log_tangent_volume) at times[i] minus the
    same quantity at times[0]; it stays near zero exactly when the density
    defines an invariant measure on the constraint manifold.
    """

    times: np.ndarray
    log_density: np.ndarray
    log_tangent_volume: np.ndarray
    residual: np.ndarray

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def samples(self):
        return list(zip(self.times, self.log_density, self.log_tangent_volume, self.residual))


def _project_to_tangent(constraints_fn, x, V):
    jac = fd_jacobian(constraints_fn, x)
    g = jac @ jac.T
    V = V - jac.T @ np.linalg.solve(g, jac @ V)
    return V


def tangent_volume_transport(
    field_fn,
    log_density_fn,
    x0,
    constraints_fn=None,
    cfg: IntegratorConfig | None = None,
    n_samples: int = 11,
    tangent_basis: np.ndarray | None = None,
    constraint_tol: float = 1e-6,
) -> TransportResult:
    """Transport a tangent-space volume element along the flow.

    The tangent basis (columns of V) solves dV/dt = J(x(t)) V with J the
    finite-difference Jacobian of the field.  At each sample time V is
    projected onto the current constraint tangent space, re-orthonormalized
    by QR, and |det R| is accumulated into a running log volume, which keeps
    the computation well scaled over long runs.  Constraint drift beyond
    constraint_tol aborts.

    With constraints_fn None the transport runs on the full chart (the
    basis starts as the identity), which turns the check into an integrated
    ambient Liouville test.
    """
    x = np.asarray(x0, dtype=float).ravel().copy()
    d = x.size
    if cfg is None:
        cfg = IntegratorConfig()
    if tangent_basis is not None:
        V = np.asarray(tangent_basis, dtype=float).copy()
    elif constraints_fn is not None:
        V = constraint_tangent_basis(constraints_fn, x)
    else:
        V = np.eye(d)
    q = V.shape[1]

    def aug_field(y):
        xs = y[:d]
        Vs = y[d:].reshape(d, q)
        fx = np.asarray(field_fn(xs), dtype=float).ravel()
        J = fd_jacobian(field_fn, xs)
        return np.concatenate([fx, (J @ Vs).ravel()])

    t_grid = np.linspace(0.0, cfg.t_end, n_samples) if cfg.t_end > 0 else np.array([0.0])
    ld0 = float(log_density_fn(x))
    times = [0.0]
    lds = [ld0]
    lvs = [0.0]
    res = [0.0]
    logvol = 0.0

    y = np.concatenate([x, V.ravel()])
    driver = _make_driver(aug_field, y, cfg)
    for t in t_grid[1:]:
        y = driver.advance(float(t))
        x = y[:d].copy()
        V = y[d:].reshape(d, q).copy()
        if constraints_fn is not None:
            cvals = np.asarray(constraints_fn(x), dtype=float).ravel()
            drift = float(np.max(np.abs(cvals))) if cvals.size else 0.0
            if drift > constraint_tol:
                raise ConstraintDriftError(
                    f"constraint drift {drift:.3e} exceeds {constraint_tol:.1e} at t={t:.4g}"
                )
            V = _project_to_tangent(constraints_fn, x, V)
        Q, R = np.linalg.qr(V)
        diag = np.abs(np.diag(R))
        if np.any(diag <= 0.0):
            raise SingularityError("transported tangent volume collapsed")
        logvol += float(np.sum(np.log(diag)))
        V = Q
        y = np.concatenate([x, V.ravel()])
        driver.x = y
        driver.reset_fsal()
        ld = float(log_density_fn(x))
        times.append(float(t))
        lds.append(ld)
        lvs.append(logvol)
        res.append(ld + logvol - ld0)
    return TransportResult(
        times=np.array(times),
        log_density=np.array(lds),
        log_tangent_volume=np.array(lvs),
        residual=np.array(res),
    )


# ---------------------------------------------------------------------------
# renormalization helpers


def polar_orthonormalize(U: np.ndarray) -> np.ndarray:
    """Closest matrix with orthonormal columns (polar factor) via SVD."""
    U = np.asarray(U, dtype=float)
    u, s, vt = np.linalg.svd(U, full_matrices=False)
    if np.any(s <= 1e-12 * max(s[0], 1e-300)):
        raise SingularityError("matrix is rank deficient; polar factor undefined")
    return u @ vt

def skew_symmetrize(M: np.ndarray) -> np.ndarray:
    """Skew part (M - M^T)/2, the nearest skew-symmetric matrix."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M - np.swapaxes(M, -1, -2))


def renormalize(coords: np.ndarray, chart) -> np.ndarray:
    """Project flat coordinates back onto the chart's state manifold."""
    return chart.renormalize(np.asarray(coords, dtype=float))
