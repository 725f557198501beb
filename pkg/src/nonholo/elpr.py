"""L+R-type flow on so(n) x Sym(so(n)) and its Stiefel specialization.

State: momentum k_bold = (I + Pi) w and a symmetric operator Pi on so(n),
written as an N x N symmetric matrix in wedge coordinates.  Equations:

    d(k_bold)/dt = [k_bold, w],
    dPi/dt       = eps [Pi, ad_w] = eps (Pi ad_w - ad_w Pi),

which keeps Pi symmetric and isospectral.  Eliminating k_bold gives the
equivalent velocity form

    dw/dt = (I + Pi)^{-1} ( [I w, w] + (1 - eps) [Pi w, w] ).

For every eps != 0 the flow preserves sqrt(det(I + Pi)) dw dPi
(equivalently det(I + Pi)^{-1/2} d(k_bold) dPi), with dPi the Lebesgue
measure in the entries Pi_ij, i <= j.  The energy <k_bold, w>/2 is
conserved for every eps.

Stiefel specialization: Pi = D pr_{D_r} with the projector carried by a
moving orthonormal r-frame U, together with the rational inertia
I(Ei ^ Ej) = D a_i a_j / (D - a_i a_j) Ei ^ Ej.  Then k_bold = I w +
D pr_{D_r}(w) obeys

    d(k_bold)/dt = [k_bold, w],    dU/dt = -eps w U,

and the flow preserves

    ( sum_I P_I(U)^2 / (a_{i_1} ... a_{i_r}) )^(-(n - r - 1)/2) d(k_bold) dU.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import liealg
from .errors import (
    DefinitenessError,
    DimensionError,
    ParameterError,
)
from .liealg import (
    InertiaOperator,
    StiefelPoint,
    ad_matrix,
    as_stiefel_matrix,
    commutator,
    from_wedge,
    isotropy_frame,
    projector_matrix,
    to_wedge,
    wedge_dim,
    _windex,
)
from .veselova import _log_base, _pr_batched

__all__ = [
    "ELPRState",
    "LPRStiefelState",
    "k_from_omega",
    "omega_from_k",
    "vf_elpr",
    "log_density_elpr",
    "density_elpr",
    "energy",
    "pi_variants",
    "vf_lpr_stiefel",
    "omega_from_k_stiefel",
    "stiefel_total_inertia",
    "log_density_lpr_stiefel",
    "density_lpr_stiefel",
    "LPRChart",
    "LPRStiefelChart",
    "random_elpr_state",
    "random_lpr_stiefel_state",
]


def _check_sym(Pi, N):
    Pi = np.asarray(Pi, dtype=float)
    if Pi.shape != (N, N):
        raise DimensionError(f"Pi must be {N} x {N}, got {Pi.shape}")
    if np.max(np.abs(Pi - Pi.T)) > 1e-12 * max(1.0, float(np.max(np.abs(Pi)))):
        raise ParameterError("Pi must be symmetric")
    return 0.5 * (Pi + Pi.T)


@dataclass(frozen=True, eq=False)
class ELPRState:
    """State: k_bold in so(n), Pi symmetric N x N in wedge coordinates."""

    k_bold: np.ndarray
    Pi: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k_bold, dtype=float)
        liealg.check_skew(k)
        N = wedge_dim(k.shape[-1])
        object.__setattr__(self, "k_bold", k)
        object.__setattr__(self, "Pi", _check_sym(self.Pi, N))

    @property
    def n(self) -> int:
        return self.k_bold.shape[-1]


@dataclass(frozen=True, eq=False)
class LPRStiefelState:
    """State: k_bold in so(n) and a Stiefel point U carrying Pi = D pr_{D_r}."""

    k_bold: np.ndarray
    U: StiefelPoint

    def __post_init__(self):
        k = np.asarray(self.k_bold, dtype=float)
        liealg.check_skew(k)
        U = self.U if isinstance(self.U, StiefelPoint) else StiefelPoint(self.U)
        if k.shape[-1] != U.n:
            raise DimensionError("k_bold size and Stiefel rows differ")
        object.__setattr__(self, "k_bold", k)
        object.__setattr__(self, "U", U)

    @property
    def n(self) -> int:
        return self.U.n

    @property
    def r(self) -> int:
        return self.U.r


# ---------------------------------------------------------------------------
# generic L+R flow


def _solve_pd(K, rhs):
    """Solve K x = rhs requiring K positive definite (batched)."""
    try:
        np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError("I + Pi lost positive definiteness") from exc
    return np.linalg.solve(K, rhs[..., None])[..., 0]


def k_from_omega(omega, Pi, op: InertiaOperator) -> np.ndarray:
    """k_bold = I w + Pi w."""
    wc = to_wedge(np.asarray(omega, dtype=float))
    return from_wedge(op.apply_coords(wc) + wc @ np.asarray(Pi, dtype=float).T, op.n)


def omega_from_k(state: ELPRState, op: InertiaOperator) -> np.ndarray:
    """Solve (I + Pi) w = k_bold; raises if I + Pi is not positive definite."""
    K = op.matrix + state.Pi
    wc = _solve_pd(K, to_wedge(state.k_bold))
    return from_wedge(wc, op.n)


def vf_elpr(state: ELPRState, op: InertiaOperator, eps: float):
    """Vector field; returns (dk_bold, dPi)."""
    w = omega_from_k(state, op)
    dk = commutator(state.k_bold, w)
    A = ad_matrix(w)
    dPi = eps * (state.Pi @ A - A @ state.Pi)
    return dk, dPi


def log_density_elpr(state_or_Pi, op: InertiaOperator) -> float:
    """log sqrt(det(I + Pi)); the density for the (w, Pi) chart."""
    Pi = getattr(state_or_Pi, "Pi", state_or_Pi)
    K = op.matrix + np.asarray(Pi, dtype=float)
    sign, logdet = np.linalg.slogdet(K)
    if np.any(sign <= 0):
        raise DefinitenessError("I + Pi must have positive determinant")
    return 0.5 * float(logdet)


def density_elpr(state_or_Pi, op) -> float:
    return float(np.exp(log_density_elpr(state_or_Pi, op)))


def energy(state: ELPRState, op: InertiaOperator) -> float:
    """H = <k_bold, w>/2, conserved for every eps."""
    w = omega_from_k(state, op)
    return 0.5 * float(liealg.inner_product(state.k_bold, w))


def _unit_gamma(gamma_or_U):
    gamma = np.asarray(gamma_or_U, dtype=float)
    liealg.check_skew(gamma)
    if abs(liealg.inner_product(gamma, gamma) - 1.0) > 1e-10:
        raise ParameterError("expected a unit-norm gamma")
    return gamma


def pi_variants(gamma_or_U, D: float, kind: str = "d_proj") -> np.ndarray:
    """Symmetric N x N operator Pi used by the worked L+R choices.

    kind "d_proj": Pi = D * (projector onto the orthogonal complement of the
    isotropy subalgebra of gamma), or D * pr_{D_r} when given a Stiefel
    point.  kind "double_bracket": Pi(eta) = D [[gamma, eta], gamma], which
    equals D ad_gamma^T ad_gamma and is positive semidefinite.  The two kinds
    agree whenever gamma is decomposable (in particular on so(3)) and differ
    in general.
    """
    D = float(D)
    if D < 0.0:
        raise ParameterError("D must be nonnegative")
    if kind == "d_proj":
        if isinstance(gamma_or_U, StiefelPoint) or (
            np.asarray(gamma_or_U).ndim == 2
            and np.asarray(gamma_or_U).shape[0] != np.asarray(gamma_or_U).shape[1]
        ):
            U = as_stiefel_matrix(gamma_or_U)
            n = U.shape[0]
            w = _windex(n)
            G = U @ U.T
            PB = _pr_batched(G, w.basis)
            return D * np.swapaxes(to_wedge(PB), -1, -2)
        gamma = _unit_gamma(gamma_or_U)
        N = wedge_dim(gamma.shape[-1])
        return D * (np.eye(N) - projector_matrix(isotropy_frame(gamma)))
    if kind == "double_bracket":
        gamma = _unit_gamma(gamma_or_U)
        A = ad_matrix(gamma)
        return D * (A.T @ A)
    raise ParameterError(f"unknown pi_variants kind {kind!r}")


# ---------------------------------------------------------------------------
# Stiefel specialization


def _assemble_transfer_lpr(G, op, D):
    """Matrix of w -> I w + D pr_{D_r}(w) in wedge coordinates, batched over G."""
    w = _windex(op.n)
    PB = _pr_batched(G[..., None, :, :], w.basis)
    P = np.swapaxes(to_wedge(PB), -1, -2)
    return op.matrix + D * P


def stiefel_total_inertia(a, D: float) -> InertiaOperator:
    """The operator E + D I^{-1} built on the rational inertia.

    Acts on Ei ^ Ej by multiplication with D / (a_i a_j); writing v = I w,
    the momentum splits as k_bold = pr_{D_r}(I_tot v) + pr_{H_r}(v).
    """
    op = InertiaOperator.wedge_products_chaplygin(a, D)
    return InertiaOperator.wedge_diagonal(op.n, 1.0 + float(D) / op.diag)


def vf_lpr_stiefel(state: LPRStiefelState, a, D: float, eps: float):
    """Vector field; returns (dk_bold, dU)."""
    op = InertiaOperator.wedge_products_chaplygin(a, D)
    dkc, dU, _ = _lpr_stiefel_rhs(
        to_wedge(state.k_bold), state.U.U.ravel(), op, D, eps, state.n, state.r
    )
    return from_wedge(dkc, state.n), dU.reshape(state.n, state.r)


def _lpr_stiefel_rhs(kc, Uflat, op, D, eps, n, r):
    shape = np.asarray(kc).shape[:-1]
    U = np.asarray(Uflat, dtype=float).reshape(shape + (n, r))
    G = U @ np.swapaxes(U, -1, -2)
    T = _assemble_transfer_lpr(G, op, D)
    wc = np.linalg.solve(T, kc[..., None])[..., 0]
    W = from_wedge(wc, n)
    K = from_wedge(kc, n)
    dkc = to_wedge(commutator(K, W))
    dU = -eps * (W @ U)
    return dkc, dU.reshape(shape + (n * r,)), wc


def omega_from_k_stiefel(state: LPRStiefelState, a, D: float) -> np.ndarray:
    op = InertiaOperator.wedge_products_chaplygin(a, D)
    G = as_stiefel_matrix(state.U) @ as_stiefel_matrix(state.U).T
    T = _assemble_transfer_lpr(G, op, D)
    return from_wedge(np.linalg.solve(T, to_wedge(state.k_bold)), state.n)


def log_density_lpr_stiefel(state: LPRStiefelState, a, D: float | None = None) -> float:
    """log of (sum_I P_I^2 / a_I)^(-(n - r - 1)/2); independent of eps."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0.0):
        raise ParameterError("requires positive a_i")
    n, r = state.n, state.r
    base = _log_base(state.U.U.ravel(), 1.0 / a, n, r, ())
    return float(-(n - r - 1) / 2.0 * base)


def density_lpr_stiefel(state, a, D: float | None = None) -> float:
    return float(np.exp(log_density_lpr_stiefel(state, a, D)))


# ---------------------------------------------------------------------------
# flat charts


class LPRChart:
    """Flat chart (w, Pi upper triangle); the ambient measure chart."""

    def __init__(self, op: InertiaOperator, eps: float):
        self.op = op
        self.n = op.n
        self.N = op.N
        self.eps = float(eps)
        self.iu = np.triu_indices(self.N)
        self.dim = self.N + self.iu[0].size

    constraints = None

    def _split(self, coords):
        coords = np.asarray(coords, dtype=float)
        wc = coords[..., : self.N]
        Pi = np.zeros(coords.shape[:-1] + (self.N, self.N))
        Pi[..., self.iu[0], self.iu[1]] = coords[..., self.N :]
        Pi = Pi + np.swapaxes(Pi, -1, -2)
        half = np.arange(self.N)
        Pi[..., half, half] *= 0.5
        return wc, Pi

    def _pack(self, wc, Pi):
        return np.concatenate([wc, Pi[..., self.iu[0], self.iu[1]]], axis=-1)

    def field(self, coords):
        wc, Pi = self._split(coords)
        K = self.op.matrix + Pi
        W = from_wedge(wc, self.n)
        Iw = self.op.apply(W)
        Pw = from_wedge(np.einsum("...ij,...j->...i", Pi, wc), self.n)
        rhs = to_wedge(commutator(Iw, W) + (1.0 - self.eps) * commutator(Pw, W))
        dwc = _solve_pd(K, rhs)
        A = ad_matrix(W)
        dPi = self.eps * (Pi @ A - A @ Pi)
        return self._pack(dwc, dPi)

    def log_density(self, coords):
        _, Pi = self._split(coords)
        K = self.op.matrix + Pi
        sign, logdet = np.linalg.slogdet(K)
        if np.any(sign <= 0):
            raise DefinitenessError("I + Pi must have positive determinant")
        return 0.5 * logdet

    def flatten(self, state: ELPRState) -> np.ndarray:
        w = omega_from_k(state, self.op)
        return self._pack(to_wedge(w), state.Pi)

    def unflatten(self, coords) -> ELPRState:
        wc, Pi = self._split(coords)
        k = k_from_omega(from_wedge(wc, self.n), Pi, self.op)
        return ELPRState(k, Pi)

    def renormalize(self, coords):
        return coords

    def invariant_residual(self, coords) -> float:
        return 0.0


class LPRStiefelChart:
    """Flat chart (k_bold wedge coords, raw entries of U)."""

    def __init__(self, a, D: float, r: int, eps: float):
        self.a = np.asarray(a, dtype=float)
        self.D = float(D)
        self.op = InertiaOperator.wedge_products_chaplygin(self.a, self.D)
        self.n = self.op.n
        self.N = self.op.N
        self.r = int(r)
        if not 1 <= self.r <= self.n:
            raise DimensionError(f"need 1 <= r <= n, got r={r}")
        self.eps = float(eps)
        self.dim = self.N + self.n * self.r

    def field(self, coords):
        coords = np.asarray(coords, dtype=float)
        kc = coords[..., : self.N]
        dkc, dU, _ = _lpr_stiefel_rhs(
            kc, coords[..., self.N :], self.op, self.D, self.eps, self.n, self.r
        )
        return np.concatenate([dkc, dU], axis=-1)

    def constraints(self, coords):
        coords = np.asarray(coords, dtype=float)
        U = coords[..., self.N :].reshape(coords.shape[:-1] + (self.n, self.r))
        g = np.swapaxes(U, -1, -2) @ U - np.eye(self.r)
        iu = np.triu_indices(self.r)
        return g[..., iu[0], iu[1]]

    def log_density(self, coords):
        coords = np.asarray(coords, dtype=float)
        base = _log_base(coords[..., self.N :], 1.0 / self.a, self.n, self.r, coords.shape[:-1])
        return -(self.n - self.r - 1) / 2.0 * base

    def flatten(self, state: LPRStiefelState) -> np.ndarray:
        return np.concatenate([to_wedge(state.k_bold), state.U.U.ravel()])

    def unflatten(self, coords) -> LPRStiefelState:
        # loose Stiefel tolerance: trajectory samples carry integration drift
        coords = np.asarray(coords, dtype=float)
        k = from_wedge(coords[: self.N], self.n)
        U = coords[self.N :].reshape(self.n, self.r)
        return LPRStiefelState(k, StiefelPoint(U, tolerance=1e-6))

    def renormalize(self, coords):
        coords = np.asarray(coords, dtype=float)
        U = coords[self.N :].reshape(self.n, self.r)
        from .numerics import polar_orthonormalize

        return np.concatenate([coords[: self.N], polar_orthonormalize(U).ravel()])

    def invariant_residual(self, coords) -> float:
        return float(np.max(np.abs(self.constraints(coords))))


# ---------------------------------------------------------------------------
# random states


def random_elpr_state(n: int, rng: np.random.Generator, pi_scale: float = 0.5) -> ELPRState:
    """Seeded random state: unit k_bold and a random positive semidefinite Pi."""
    N = wedge_dim(n)
    kc = rng.standard_normal(N)
    kc = kc / np.linalg.norm(kc)
    B = rng.standard_normal((N, N))
    q, _ = np.linalg.qr(B)
    Pi = q @ np.diag(rng.uniform(0.0, pi_scale, size=N)) @ q.T
    Pi = 0.5 * (Pi + Pi.T)
    return ELPRState(from_wedge(kc, n), Pi)


def random_lpr_stiefel_state(n: int, r: int, rng: np.random.Generator) -> LPRStiefelState:
    kc = rng.standard_normal(wedge_dim(n))
    kc = kc / np.linalg.norm(kc)
    U = liealg.random_stiefel(n, r, rng)
    return LPRStiefelState(from_wedge(kc, n), StiefelPoint(U))
