"""Sphere-sphere rolling of a dynamically nonsymmetric ball, in 3-vector form.

Two systems on R^3 x S^2 with inertia I = diag(I1, I2, I3), offset D >= 0
and a real parameter eps (eps = sigma/(sigma +- rho) for rolling over a
sphere of radius sigma; eps = 1 recovers rolling over a plane):

marble (no-slip) ball:

    dk/dt = k x w,   dgamma/dt = eps gamma x w,
    k = I w + D w - D (w, gamma) gamma,

with invariant density sqrt(det(I + D)(1 - D (gamma, (I + D)^{-1} gamma)))
in the (w, gamma) variables.

rubber (no-slip, no-twist) ball, multiplier form:

    dm/dt = m x w + lam gamma,   dgamma/dt = eps gamma x w,
    m = (I + D) w = I_tot w,

where lam is fixed by d/dt (w, gamma) = 0, so (w, gamma) = c is a first
integral.  The invariant density is (I_tot^{-1} gamma, gamma)^(1/(2 eps))
in both the (m, gamma) and (w, gamma) variables.  The equivalent
momentum form carries m_bold = I_tot w + (gamma, w - I_tot w) gamma:

    d(m_bold)/dt = eps m_bold x w
                   + (1 - eps)(I_tot w x w - (I_tot w x w, gamma) gamma).

Everything here is written with plain cross products, independent of the
wedge-coordinate machinery, so these flows can serve as oracles for the
so(3) specializations of the general modules (see ``lift_to_so3``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "BallState",
    "k_vector",
    "m_vector",
    "momentum_vector",
    "omega_from_k",
    "omega_from_momentum",
    "vf_chaplygin",
    "vf_rubber",
    "rubber_multiplier",
    "densities_3d",
    "log_density_3d",
    "epsilon_from_radii",
    "ChaplyginChart",
    "RubberChart",
    "lift_to_so3",
    "random_ball_state",
]


def _vec3(v, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise DimensionError(f"{name} must be a 3-vector, got shape {v.shape}")
    return v


def _dot(a, b):
    return np.sum(a * b, axis=-1)


@dataclass(frozen=True, eq=False)
class BallState:
    """Ball state (w, gamma) with parameters (inertia, D, eps).

    tolerance bounds the accepted deviation of |gamma| from 1; trajectory
    samples carrying integration drift may pass a looser value.
    """

    omega: np.ndarray
    gamma: np.ndarray
    inertia: np.ndarray
    D: float = 0.0
    eps: float = 1.0
    tolerance: float = 1e-10

    def __post_init__(self):
        omega = _vec3(self.omega, "omega")
        gamma = _vec3(self.gamma, "gamma")
        inertia = _vec3(self.inertia, "inertia")
        if np.any(inertia <= 0.0):
            raise ParameterError("principal inertia moments must be positive")
        D = float(self.D)
        if D < 0.0:
            raise ParameterError("D must be nonnegative")
        if abs(_dot(gamma, gamma) - 1.0) > self.tolerance:
            raise ParameterError("gamma must be a unit vector")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def total_inertia(self) -> np.ndarray:
        """Principal moments of I_tot = I + D."""
        return self.inertia + self.D


def k_vector(state: BallState) -> np.ndarray:
    """Marble-ball momentum k = I w + D w - D (w, gamma) gamma."""
    w, g = state.omega, state.gamma
    return state.inertia * w + state.D * (w - _dot(w, g) * g)

def m_vector(state: BallState) -> np.ndarray:
    """Rubber-ball multiplier-form momentum m = (I + D) w."""
    return state.total_inertia * state.omega


def momentum_vector(state: BallState) -> np.ndarray:
    """Rubber-ball momentum m_bold = I_tot w + (gamma, w - I_tot w) gamma."""
    w, g = state.omega, state.gamma
    v = state.total_inertia * w
    return v + _dot(g, w - v) * g


def _k_matrix(gamma, inertia, D):
    """K(gamma) = diag(I + D) - D gamma gamma^T, batched over gamma."""
    eye = np.eye(3)
    diag = (np.asarray(inertia, dtype=float) + D) * eye
    return diag - D * (gamma[..., :, None] * gamma[..., None, :])


def omega_from_k(k, gamma, inertia, D) -> np.ndarray:
    """Solve K(gamma) w = k for the marble ball."""
    K = _k_matrix(np.asarray(gamma, dtype=float), inertia, float(D))
    return np.linalg.solve(K, np.asarray(k, dtype=float)[..., None])[..., 0]


def omega_from_momentum(m_bold, gamma, inertia, D) -> np.ndarray:
    """Solve (diag(I_tot) + gamma gamma^T (E - diag(I_tot))) w = m_bold."""
    it = np.asarray(inertia, dtype=float) + float(D)
    g = np.asarray(gamma, dtype=float)
    M = it * np.eye(3) + (g[..., :, None] * g[..., None, :]) @ (np.eye(3) - it * np.eye(3))
    return np.linalg.solve(M, np.asarray(m_bold, dtype=float)[..., None])[..., 0]


def vf_chaplygin(state: BallState):
    """Marble-ball field; returns (dk, dgamma)."""
    w, g = state.omega, state.gamma
    k = k_vector(state)
    return np.cross(k, w), state.eps * np.cross(g, w)


def rubber_multiplier(state: BallState) -> float:
    """Reaction scalar lam keeping (w, gamma) constant along the rubber flow.

    Solving d/dt (w, gamma) = 0 with dw = I_tot^{-1}(m x w + lam gamma)
    and dgamma = eps gamma x w gives
    lam = -(gamma, I_tot^{-1} (m x w)) / (gamma, I_tot^{-1} gamma);
    the gamma x w contribution drops since it is orthogonal to w.
    """
    w, g = state.omega, state.gamma
    it = state.total_inertia
    m = it * w
    return float(-_dot(g, np.cross(m, w) / it) / _dot(g, g / it))


def vf_rubber(state: BallState, form: str = "multiplier"):
    """Rubber-ball field; returns (dm, dgamma) or (dm_bold, dgamma).

    Both forms trace the same (w, gamma) trajectories from matched
    initial data.
    """
    w, g = state.omega, state.gamma
    dg = state.eps * np.cross(g, w)
    if form == "multiplier":
        m = m_vector(state)
        return np.cross(m, w) + rubber_multiplier(state) * g, dg
    if form == "momentum":
        eps = state.eps
        v = state.total_inertia * w
        mb = momentum_vector(state)
        vw = np.cross(v, w)
        return eps * np.cross(mb, w) + (1.0 - eps) * (vw - _dot(vw, g) * g), dg
    raise ParameterError(f"unknown rubber form {form!r}")


def log_density_3d(state: BallState, which: str) -> float:
    if which == "chaplygin":
        it = state.total_inertia
        g = state.gamma
        val = np.prod(it) * (1.0 - state.D * _dot(g, g / it))
        return 0.5 * float(np.log(val))
    if which == "rubber":
        if state.eps == 0.0:
            raise ParameterError("density is undefined at eps = 0")
        base = _dot(state.gamma, state.gamma / state.total_inertia)
        return float(np.log(base) / (2.0 * state.eps))
    raise ParameterError(f"unknown density selector {which!r}")


def densities_3d(state: BallState, which: str) -> float:
    """Closed-form invariant densities.

    "chaplygin": sqrt(det(I + D)(1 - D (gamma, (I + D)^{-1} gamma))) in the
    (w, gamma) variables.  "rubber": (I_tot^{-1} gamma, gamma)^(1/(2 eps))
    in the (m, gamma) or (w, gamma) variables.
    """
    if which == "chaplygin":
        it = state.total_inertia
        g = state.gamma
        return float(np.sqrt(np.prod(it) * (1.0 - state.D * _dot(g, g / it))))
    if which == "rubber":
        if state.eps == 0.0:
            raise ParameterError("density is undefined at eps = 0")
        base = _dot(state.gamma, state.gamma / state.total_inertia)
        return float(base ** (1.0 / (2.0 * state.eps)))
    raise ParameterError(f"unknown density selector {which!r}")


def epsilon_from_radii(sigma: float, rho: float, contact: str = "outer") -> float:
    """eps = sigma/(sigma + rho) for rolling over the outer surface of the
    fixed sphere, sigma/(sigma - rho) for rolling inside it (or for a
    spherical shell enclosing it); sigma -> infinity gives eps -> 1.
    """
    sigma, rho = float(sigma), float(rho)
    if sigma <= 0.0 or rho <= 0.0:
        raise ParameterError("radii must be positive")
    if contact == "outer":
        return sigma / (sigma + rho)
    if contact == "inner":
        if sigma == rho:
            raise ParameterError("inner contact needs sigma != rho")
        return sigma / (sigma - rho)
    raise ParameterError(f"unknown contact {contact!r}")


# ---------------------------------------------------------------------------
# flat charts on (R^3 x S^2)


class _BallChart:
    dim = 6

    def __init__(self, inertia, D, eps):
        self.inertia = _vec3(inertia, "inertia")
        if np.any(self.inertia <= 0.0):
            raise ParameterError("principal inertia moments must be positive")
        self.D = float(D)
        if self.D < 0.0:
            raise ParameterError("D must be nonnegative")
        self.eps = float(eps)
        self.it = self.inertia + self.D

    def constraints(self, coords):
        coords = np.asarray(coords, dtype=float)
        g = coords[..., 3:]
        return (_dot(g, g) - 1.0)[..., None]

    def renormalize(self, coords):
        coords = np.asarray(coords, dtype=float)
        g = coords[..., 3:]
        g = g / np.linalg.norm(g, axis=-1, keepdims=True)
        return np.concatenate([coords[..., :3], g], axis=-1)

    def invariant_residual(self, coords) -> float:
        return float(np.max(np.abs(self.constraints(coords))))


class ChaplyginChart(_BallChart):
    """Marble ball in the (w, gamma) variables."""

    def field(self, coords):
        coords = np.asarray(coords, dtype=float)
        w, g = coords[..., :3], coords[..., 3:]
        k = self.inertia * w + self.D * (w - _dot(w, g)[..., None] * g)
        dk = np.cross(k, w)
        dg = self.eps * np.cross(g, w)
        # dk = K(gamma) dw - D ((w, dg) gamma + (w, gamma) dg)
        rhs = dk + self.D * (_dot(w, dg)[..., None] * g + _dot(w, g)[..., None] * dg)
        dw = np.linalg.solve(_k_matrix(g, self.inertia, self.D), rhs[..., None])[..., 0]
        return np.concatenate([dw, dg], axis=-1)

    def log_density(self, coords):
        coords = np.asarray(coords, dtype=float)
        g = coords[..., 3:]
        val = np.prod(self.it) * (1.0 - self.D * _dot(g, g / self.it))
        return 0.5 * np.log(val)

    def flatten(self, state: BallState) -> np.ndarray:
        return np.concatenate([state.omega, state.gamma])

    def unflatten(self, coords) -> BallState:
        # loose tolerance: trajectory samples carry integration drift
        coords = np.asarray(coords, dtype=float)
        return BallState(coords[:3], coords[3:], self.inertia, self.D, self.eps, tolerance=1e-6)


class RubberChart(_BallChart):
    """Rubber ball in the (m, gamma) or (w, gamma) variables."""

    def __init__(self, inertia, D, eps, variables: str = "m"):
        super().__init__(inertia, D, eps)
        if variables not in ("m", "omega"):
            raise ParameterError(f"unknown chart variables {variables!r}")
        if eps == 0.0:
            raise ParameterError("density is undefined at eps = 0")
        self.variables = variables

    def _omega(self, lead):
        return lead / self.it if self.variables == "m" else lead

    def field(self, coords):
        coords = np.asarray(coords, dtype=float)
        lead, g = coords[..., :3], coords[..., 3:]
        w = self._omega(lead)
        m = self.it * w
        lam = -_dot(g, np.cross(m, w) / self.it) / _dot(g, g / self.it)
        dm = np.cross(m, w) + lam[..., None] * g
        dg = self.eps * np.cross(g, w)
        dlead = dm if self.variables == "m" else dm / self.it
        return np.concatenate([dlead, dg], axis=-1)

    def log_density(self, coords):
        coords = np.asarray(coords, dtype=float)
        g = coords[..., 3:]
        return np.log(_dot(g, g / self.it)) / (2.0 * self.eps)

    def flatten(self, state: BallState) -> np.ndarray:
        lead = m_vector(state) if self.variables == "m" else state.omega
        return np.concatenate([lead, state.gamma])

    def unflatten(self, coords) -> BallState:
        # loose tolerance: trajectory samples carry integration drift
        coords = np.asarray(coords, dtype=float)
        w = self._omega(coords[:3])
        return BallState(w, coords[3:], self.inertia, self.D, self.eps, tolerance=1e-6)


# ---------------------------------------------------------------------------
# lifts to the general so(3) modules


def lift_to_so3(state: BallState, target: str):
    """Lift to a general-module state whose flow projects back to this one.

    Returns (state, operator):
      "elpr":     marble ball as the symmetric-operator flow with
                  Pi = D pr_{gamma-perp} and the so(3) inertia of I;
      "elr":      rubber ball as the multiplier-form frame flow with
                  k = 1, e1 = hat(gamma) and inertia I + D;
      "veselova": rubber ball as the r = 1 moving-frame flow with the
                  shifted inertia (its wedge-product density formula does
                  not apply to this operator).
    """
    from . import elpr as _elpr
    from . import elr as _elr
    from . import veselova as _veselova
    from .liealg import Frame, InertiaOperator, StiefelPoint, hat

    if target == "elpr":
        op = InertiaOperator.so3_vector(state.inertia)
        Pi = _elpr.pi_variants(hat(state.gamma), state.D, "d_proj")
        return _elpr.ELPRState(hat(k_vector(state)), Pi), op
    if target == "elr":
        op = InertiaOperator.so3_vector(state.total_inertia)
        frames = Frame(hat(state.gamma)[None], orthonormal=True)
        return _elr.ELRMultiplierState.from_omega(hat(state.omega), frames), op
    if target == "veselova":
        op = InertiaOperator.shifted(InertiaOperator.so3_vector(state.inertia), state.D)
        U = StiefelPoint(state.gamma[:, None])
        return _veselova.VeselovaState(hat(momentum_vector(state)), U), op
    raise ParameterError(f"no so(3) lift for target {target!r}")


def random_ball_state(
    rng: np.random.Generator,
    inertia=None,
    D: float = 1.0,
    eps: float = 1.0,
    zero_constraint: bool = False,
) -> BallState:
    """Seeded random state; zero_constraint makes (w, gamma) = 0 exactly."""
    inertia = rng.uniform(0.5, 2.5, size=3) if inertia is None else np.asarray(inertia, float)
    g = rng.standard_normal(3)
    g = g / np.linalg.norm(g)
    w = rng.standard_normal(3)
    if zero_constraint:
        w = w - _dot(w, g) * g
    w = w / np.linalg.norm(w)
    return BallState(w, g, inertia, D, eps)
