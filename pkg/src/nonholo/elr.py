"""LR-type constrained rigid-body flow on so(n) with a twisted frame.

State (multiplier form): angular velocity w in so(n) and a frame
e_1, ..., e_k spanning the constraint subspace H.  With m = I w the
equations are

    dm/dt   = [m, w] + sum_i lam^i e_i,
    de_i/dt = eps [e_i, w],

where the multipliers enforce d/dt <w, e_i> = 0:

    lam^i = - sum_j A^{ij} <e_j, I^{-1}[m, w]>,   A_ij = <e_i, I^{-1} e_j>.

The twist parameter eps rotates the constraint subspace along the flow;
eps = 1 is the classical left-invariant case.  For eps != 0 the flow on the
full linear chart (w, e_1..e_k) preserves the measure

    det(A)^(1/(2 eps)) dw de_1 ... de_k,

and this holds for any linearly independent (not necessarily orthonormal)
frame configuration.

Momentum form: with an orthonormal frame e_{k+1}, ..., e_N of the
complementary subspace D and

    m_bold = pr_D I w + pr_H w = J w,   J = Id + pr_D (I - Id),

the equivalent equations are

    d(m_bold)/dt = eps [m_bold, w] + (1 - eps) pr_D [I w, w],
    de_i/dt      = eps [e_i, w],   i = k+1..N,

and on the manifold of orthonormal D-frames the invariant density is

    det(<I e_i, e_j>)_{i,j>k} ^ (1/(2 eps) - 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import liealg
from .errors import DimensionError, ParameterError, SingularityError
from .liealg import (
    Frame,
    InertiaOperator,
    commutator,
    from_wedge,
    inner_product,
    to_wedge,
    wedge_dim,
)

__all__ = [
    "ELRMultiplierState",
    "ELRMomentumState",
    "multipliers",
    "vf_multiplier",
    "analytic_divergence",
    "momentum_of",
    "omega_of",
    "vf_momentum",
    "log_density_multiplier",
    "density_multiplier",
    "log_density_momentum",
    "density_momentum",
    "first_integrals",
    "FirstIntegrals",
    "MultiplierChart",
    "MomentumChart",
    "random_multiplier_state",
    "random_momentum_state",
]


@dataclass(frozen=True, eq=False)
class ELRMultiplierState:
    """Multiplier-form state: omega in so(n), H-frame, constraint constants."""

    omega: np.ndarray
    frames: Frame
    constants: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        liealg.check_skew(omega)
        if omega.shape[-1] != self.frames.n:
            raise DimensionError("omega and frame sizes differ")
        constants = np.asarray(self.constants, dtype=float)
        if constants.shape != (self.frames.k,):
            raise DimensionError("one constraint constant per frame element")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "constants", constants)

    @classmethod
    def from_omega(cls, omega, frames: Frame) -> "ELRMultiplierState":
        """Take the constraint constants c_i = <omega, e_i> from the data."""
        c = inner_product(np.asarray(omega, dtype=float), frames.elems)
        return cls(omega, frames, c)

    @property
    def n(self) -> int:
        return self.frames.n

    @property
    def k(self) -> int:
        return self.frames.k

    def phi(self) -> np.ndarray:
        """Current constraint values <omega, e_i>."""
        return inner_product(self.omega, self.frames.elems)


@dataclass(frozen=True, eq=False)
class ELRMomentumState:
    """Momentum-form state: m_bold in so(n) and an orthonormal D-frame.

    tolerance bounds the accepted Gram deviation; trajectory samples
    carrying integration drift may pass a looser value than the default.
    """

    m_bold: np.ndarray
    frames_d: Frame
    tolerance: float = 1e-10

    def __post_init__(self):
        m = np.asarray(self.m_bold, dtype=float)
        liealg.check_skew(m)
        if m.shape[-1] != self.frames_d.n:
            raise DimensionError("m_bold and frame sizes differ")
        g = self.frames_d.gram()
        if np.max(np.abs(g - np.eye(self.frames_d.k))) > self.tolerance:
            raise ParameterError("momentum form requires an orthonormal D-frame")
        object.__setattr__(self, "m_bold", m)

    @property
    def n(self) -> int:
        return self.frames_d.n

    @property
    def k(self) -> int:
        """Number of constraints (codimension of the D-frame)."""
        return wedge_dim(self.n) - self.frames_d.k


# ---------------------------------------------------------------------------
# batched kernels on wedge coordinates


def _multiplier_rhs(wc, ec, op, eps):
    """Batched field. wc: (..., N), ec: (..., k, N). Returns (dwc, dec)."""
    W = from_wedge(wc, op.n)
    M = op.apply(W)
    br = commutator(M, W)
    s = op.solve_coords(to_wedge(br))
    es = op.solve_coords(ec)
    A = np.einsum("...iN,...jN->...ij", ec, es)
    b = np.einsum("...kN,...N->...k", ec, s)
    lam = -np.linalg.solve(A, b[..., None])[..., 0]
    dmc = to_wedge(br) + np.einsum("...k,...kN->...N", lam, ec)
    dwc = op.solve_coords(dmc)
    E = from_wedge(ec, op.n)
    dE = eps * commutator(E, W[..., None, :, :])
    return dwc, to_wedge(dE), lam


def _momentum_rhs(mc, fc, op, eps):
    """Batched field. mc: (..., N), fc: (..., p, N). Returns (dmc, dfc)."""
    N = op.N
    PD = np.einsum("...pi,...pj->...ij", fc, fc)
    Jm = np.eye(N) + PD @ (op.matrix - np.eye(N))
    wc = np.linalg.solve(Jm, mc[..., None])[..., 0]
    W = from_wedge(wc, op.n)
    Mb = from_wedge(mc, op.n)
    br1 = to_wedge(commutator(Mb, W))
    br2 = to_wedge(commutator(op.apply(W), W))
    dmc = eps * br1 + (1.0 - eps) * np.einsum("...ij,...j->...i", PD, br2)
    F = from_wedge(fc, op.n)
    dF = eps * commutator(F, W[..., None, :, :])
    return dmc, to_wedge(dF)


def _log_gram_det(ec, op, mode):
    if mode == "inverse_inertia":
        es = op.solve_coords(ec)
    else:
        es = op.apply_coords(ec)
    A = np.einsum("...iN,...jN->...ij", ec, es)
    sign, logdet = np.linalg.slogdet(A)
    if np.any(sign <= 0):
        raise SingularityError("frame Gram determinant is not positive")
    return logdet


def _check_eps(eps):
    if eps == 0.0:
        raise ParameterError("density is undefined at eps = 0")


# ---------------------------------------------------------------------------
# state-level operations


def multipliers(state: ELRMultiplierState, op: InertiaOperator) -> np.ndarray:
    """Constraint multipliers lam^i at the given state."""
    _, _, lam = _multiplier_rhs(to_wedge(state.omega), state.frames.coords, op, 1.0)
    return lam


def vf_multiplier(state: ELRMultiplierState, op: InertiaOperator, eps: float):
    """Multiplier-form vector field; returns (domega, dframes)."""
    dwc, dec, _ = _multiplier_rhs(to_wedge(state.omega), state.frames.coords, op, eps)
    return from_wedge(dwc, state.n), from_wedge(dec, state.n)


def analytic_divergence(state: ELRMultiplierState, op: InertiaOperator) -> float:
    """Closed-form divergence of the momentum block of the multiplier field.

    Only the constraint-force term contributes:

        div = sum_{ij} A^{ij} <[I^{-1} e_i, I^{-1} m], e_j>.
    """
    ec = state.frames.coords
    es = op.solve_coords(ec)
    A = ec @ es.T
    Ainv = np.linalg.inv(A)
    m = op.apply(state.omega)
    ei_inv = from_wedge(es, state.n)
    br = commutator(ei_inv, op.solve(m))
    inner = np.einsum("iN,jN->ij", to_wedge(br), ec)
    return float(np.sum(Ainv * inner))


def momentum_of(
    state: ELRMultiplierState, op: InertiaOperator, frames_d: Frame | None = None
) -> ELRMomentumState:
    """Momentum-form state from an orthonormal multiplier-form state.

    The D-frame defaults to an orthonormal completion of the H-frame.
    """
    g = state.frames.gram()
    if np.max(np.abs(g - np.eye(state.k))) > 1e-10:
        raise ParameterError("momentum_of requires an orthonormal H-frame")
    if frames_d is None:
        frames_d = liealg.orthonormal_complement(state.frames)
    pr_h, _ = liealg.subspace_projectors(state.frames)
    pr_d, _ = liealg.subspace_projectors(frames_d)
    m_bold = pr_d(op.apply(state.omega)) + pr_h(state.omega)
    return ELRMomentumState(m_bold, frames_d)


def omega_of(state: ELRMomentumState, op: InertiaOperator) -> np.ndarray:
    """Angular velocity from a momentum-form state: solve J w = m_bold."""
    fc = state.frames_d.coords
    N = op.N
    PD = fc.T @ fc
    Jm = np.eye(N) + PD @ (op.matrix - np.eye(N))
    wc = np.linalg.solve(Jm, to_wedge(state.m_bold))
    return from_wedge(wc, state.n)


def vf_momentum(state: ELRMomentumState, op: InertiaOperator, eps: float):
    """Momentum-form vector field; returns (dm_bold, dframes_d)."""
    dmc, dfc = _momentum_rhs(to_wedge(state.m_bold), state.frames_d.coords, op, eps)
    return from_wedge(dmc, state.n), from_wedge(dfc, state.n)


def log_density_multiplier(state: ELRMultiplierState, op: InertiaOperator, eps: float) -> float:
    """log of det(<e_i, I^{-1} e_j>)^(1/(2 eps))."""
    _check_eps(eps)
    return float(_log_gram_det(state.frames.coords, op, "inverse_inertia")) / (2.0 * eps)


def density_multiplier(state, op, eps) -> float:
    return float(np.exp(log_density_multiplier(state, op, eps)))


def log_density_momentum(state: ELRMomentumState, op: InertiaOperator, eps: float) -> float:
    """log of det(<I e_i, e_j>)_{D-frame}^(1/(2 eps) - 1)."""
    _check_eps(eps)
    logdet = _log_gram_det(state.frames_d.coords, op, "inertia")
    return float((1.0 / (2.0 * eps) - 1.0) * logdet)


def density_momentum(state, op, eps) -> float:
    return float(np.exp(log_density_momentum(state, op, eps)))


@dataclass(frozen=True)
class FirstIntegrals:
    phi: np.ndarray
    energy: float
    modified_energy: float


def first_integrals(state: ELRMultiplierState, op: InertiaOperator) -> FirstIntegrals:
    """Constraint values phi_i, energy H = <I w, w>/2, and F = H - <pr_H w, I w>.

    phi_i is conserved for every eps; H is conserved when all constants
    vanish; F is conserved exactly at eps = 1.
    """
    w = state.omega
    m = op.apply(w)
    phi = inner_product(w, state.frames.elems)
    H = 0.5 * float(inner_product(m, w))
    ec = state.frames.coords
    g = ec @ ec.T
    coeff = np.linalg.solve(g, inner_product(state.frames.elems, w))
    pr_h_w = from_wedge(coeff @ ec, state.n)
    F = H - float(inner_product(pr_h_w, m))
    return FirstIntegrals(phi=np.asarray(phi, dtype=float), energy=H, modified_energy=F)


# ---------------------------------------------------------------------------
# flat charts


class MultiplierChart:
    """Flat chart (w, e_1..e_k) by wedge coordinates; full linear space."""

    def __init__(self, op: InertiaOperator, k: int, eps: float):
        self.op = op
        self.n = op.n
        self.N = op.N
        self.k = int(k)
        self.eps = float(eps)
        self.dim = (self.k + 1) * self.N

    constraints = None

    def field(self, coords):
        coords = np.asarray(coords, dtype=float)
        wc = coords[..., : self.N]
        ec = coords[..., self.N :].reshape(coords.shape[:-1] + (self.k, self.N))
        dwc, dec, _ = _multiplier_rhs(wc, ec, self.op, self.eps)
        return np.concatenate(
            [dwc, dec.reshape(coords.shape[:-1] + (self.k * self.N,))], axis=-1
        )

    def log_density(self, coords):
        _check_eps(self.eps)
        coords = np.asarray(coords, dtype=float)
        ec = coords[..., self.N :].reshape(coords.shape[:-1] + (self.k, self.N))
        return _log_gram_det(ec, self.op, "inverse_inertia") / (2.0 * self.eps)

    def flatten(self, state: ELRMultiplierState) -> np.ndarray:
        return np.concatenate([to_wedge(state.omega), state.frames.coords.ravel()])

    def unflatten(self, coords) -> ELRMultiplierState:
        coords = np.asarray(coords, dtype=float)
        omega = from_wedge(coords[: self.N], self.n)
        ec = coords[self.N :].reshape(self.k, self.N)
        return ELRMultiplierState.from_omega(omega, Frame(from_wedge(ec, self.n)))

    def renormalize(self, coords):
        return coords

    def invariant_residual(self, coords) -> float:
        return 0.0


class MomentumChart:
    """Flat chart (m_bold, e_{k+1}..e_N); frames constrained orthonormal."""

    def __init__(self, op: InertiaOperator, k: int, eps: float):
        self.op = op
        self.n = op.n
        self.N = op.N
        self.k = int(k)
        self.p = self.N - self.k
        if self.p < 1:
            raise DimensionError("momentum form needs at least one D-frame element")
        self.eps = float(eps)
        self.dim = (self.p + 1) * self.N

    def _split(self, coords):
        coords = np.asarray(coords, dtype=float)
        mc = coords[..., : self.N]
        fc = coords[..., self.N :].reshape(coords.shape[:-1] + (self.p, self.N))
        return mc, fc

    def field(self, coords):
        mc, fc = self._split(coords)
        dmc, dfc = _momentum_rhs(mc, fc, self.op, self.eps)
        return np.concatenate(
            [dmc, dfc.reshape(np.asarray(coords).shape[:-1] + (self.p * self.N,))],
            axis=-1,
        )

    def constraints(self, coords):
        _, fc = self._split(coords)
        g = np.einsum("...iN,...jN->...ij", fc, fc) - np.eye(self.p)
        iu = np.triu_indices(self.p)
        return g[..., iu[0], iu[1]]

    def log_density(self, coords):
        _check_eps(self.eps)
        _, fc = self._split(coords)
        return (1.0 / (2.0 * self.eps) - 1.0) * _log_gram_det(fc, self.op, "inertia")

    def flatten(self, state: ELRMomentumState) -> np.ndarray:
        return np.concatenate([to_wedge(state.m_bold), state.frames_d.coords.ravel()])

    def unflatten(self, coords) -> ELRMomentumState:
        # loose Gram tolerance: trajectory samples carry integration drift
        mc, fc = self._split(coords)
        return ELRMomentumState(
            from_wedge(mc, self.n), Frame(from_wedge(fc, self.n)), tolerance=1e-6
        )

    def renormalize(self, coords):
        mc, fc = self._split(coords)
        return np.concatenate([mc, liealg.orthonormalize_rows(fc).ravel()])

    def invariant_residual(self, coords) -> float:
        return float(np.max(np.abs(self.constraints(coords))))


# ---------------------------------------------------------------------------
# random states


def random_multiplier_state(
    n: int,
    k: int,
    rng: np.random.Generator,
    orthonormal_frames: bool = True,
    zero_constants: bool = False,
) -> ELRMultiplierState:
    """Seeded random state: unit-speed omega, generic k-element frame."""
    N = wedge_dim(n)
    if not 1 <= k <= N - 1:
        raise DimensionError(f"need 1 <= k <= N-1 = {N - 1}, got k={k}")
    ec = rng.standard_normal((k, N))
    if orthonormal_frames:
        ec = liealg.orthonormalize_rows(ec)
    wc = rng.standard_normal(N)
    if zero_constants:
        g = ec @ ec.T
        wc = wc - ec.T @ np.linalg.solve(g, ec @ wc)
    wc = wc / np.linalg.norm(wc)
    frames = Frame(from_wedge(ec, n), orthonormal=orthonormal_frames)
    return ELRMultiplierState.from_omega(from_wedge(wc, n), frames)


def random_momentum_state(n: int, k: int, rng: np.random.Generator) -> ELRMomentumState:
    """Seeded random momentum-form state with an orthonormal D-frame."""
    N = wedge_dim(n)
    if not 1 <= k <= N - 1:
        raise DimensionError(f"need 1 <= k <= N-1 = {N - 1}, got k={k}")
    p = N - k
    fc = liealg.orthonormalize_rows(rng.standard_normal((p, N)))
    mc = rng.standard_normal(N)
    mc = mc / np.linalg.norm(mc)
    return ELRMomentumState(from_wedge(mc, n), Frame(from_wedge(fc, n), orthonormal=True))
