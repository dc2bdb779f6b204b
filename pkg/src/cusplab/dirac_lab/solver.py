"""Finite-difference assembly and the symmetric tridiagonal eigensolver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from cusplab.dirac_lab.geometry import (
    Chirality,
    CuspSide,
    ModeSpec,
    NeckGeometry,
    potential,
    potential_derivative,
)

DEFAULT_POINTS = 4000  # default resolution: h = length / DEFAULT_POINTS


class NonConvergenceError(RuntimeError):
    """The tridiagonal eigensolver failed to converge."""


@dataclass(frozen=True)
class Grid:
    """Uniform interior grid for Dirichlet problems on the arclength domain."""

    rho_values: np.ndarray
    h: float

    def __post_init__(self) -> None:
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        if self.n < 16:
            raise ValueError("need at least 16 interior points")
        steps = np.diff(self.rho_values)
        if steps.size and not np.allclose(steps, self.h, rtol=1e-9, atol=0.0):
            raise ValueError("grid must be uniform")
        self.rho_values.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.rho_values)

    @classmethod
    def for_geometry(cls, geom: NeckGeometry, n: int | None = None,
                     h: float | None = None) -> "Grid":
        """Interior points of [rho_min, rho_max]; default spacing length/4000."""
        if n is not None and h is not None:
            raise ValueError("give n or h, not both")
        if n is None:
            target = h if h is not None else geom.length / DEFAULT_POINTS
            n = max(16, int(round(geom.length / target)) - 1)
        hh = geom.length / (n + 1)
        rho = geom.rho_min + hh * np.arange(1, n + 1)
        return cls(rho, hh)

    def halved(self) -> "Grid":
        """The nested refinement with spacing h/2 (2n + 1 interior points)."""
        a = self.rho_values[0] - self.h
        hh = self.h / 2.0
        m = 2 * self.n + 1
        return Grid(a + hh * np.arange(1, m + 1), hh)


@dataclass(frozen=True)
class Tridiagonal:
    """A real symmetric tridiagonal matrix (diagonal + off-diagonal)."""

    diagonal: np.ndarray
    offdiagonal: np.ndarray

    def __post_init__(self) -> None:
        if len(self.offdiagonal) != len(self.diagonal) - 1:
            raise ValueError("off-diagonal must be one shorter than the diagonal")
        self.diagonal.setflags(write=False)
        self.offdiagonal.setflags(write=False)

    @property
    def dimension(self) -> int:
        return len(self.diagonal)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[:-1] += self.offdiagonal * v[1:]
        out[1:] += self.offdiagonal * v[:-1]
        return out


def tridiagonal_from_potential(w: np.ndarray, h: float) -> Tridiagonal:
    """Central-difference -d^2/drho^2 + diag(w) with Dirichlet ends."""
    n = len(w)
    diag = 2.0 / h**2 + np.asarray(w, dtype=float)
    off = np.full(n - 1, -1.0 / h**2)
    return Tridiagonal(diag, off)


def assemble_hamiltonian(
    geom: NeckGeometry,
    mode: ModeSpec,
    grid: Grid,
    potential_override: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Tridiagonal:
    """Mode Hamiltonian -d^2/drho^2 + V^2 +- V' on the grid, Dirichlet ends.

    The sign is the mode's chirality.  ``potential_override`` replaces V by
    an arbitrary profile (V' then comes from centered differences of the
    override, except that a constant override has V' = 0 exactly).
    """
    rho = grid.rho_values
    if not (geom.contains(rho[0] - grid.h) or math.isclose(
            rho[0] - grid.h, geom.rho_min, rel_tol=1e-9, abs_tol=1e-12)):
        raise ValueError("grid does not cover the geometry's domain")
    if potential_override is None:
        v = np.asarray(potential(geom, mode, rho), dtype=float)
        vp = np.asarray(potential_derivative(geom, mode, rho), dtype=float)
    else:
        v = np.asarray(potential_override(rho), dtype=float) * np.ones_like(rho)
        vp = np.gradient(v, grid.h) if np.ptp(v) > 0 else np.zeros_like(v)
    sign = float(mode.chirality.value)
    return tridiagonal_from_potential(v * v + sign * vp, grid.h)


def partner_minus_hamiltonian(geom: NeckGeometry, mode: ModeSpec, grid: Grid) -> Tridiagonal:
    """The minus-chirality operator with its supersymmetric wall condition.

    Squaring the mode Dirac operator with Dirichlet data on the plus
    component forces the Robin condition u' + V u = 0 on the minus component
    at the wall; realizing that condition (ghost-node elimination, then a
    diagonal similarity restoring symmetry) makes -d^2/drho^2 + V^2 - V'
    isospectral to the plus operator away from zero modes.  At t = 0 the wall
    is the shallow end of the cusp; the deep end keeps Dirichlet, which is
    invisible under the confining potential.
    """
    if geom.t != 0:
        raise ValueError("the partner realization is used on the split (t = 0) neck")
    wall_at_max = geom.cusp_side is CuspSide.RIGHT
    h = grid.h
    if wall_at_max:
        rho = np.append(grid.rho_values, geom.rho_max)
    else:
        rho = np.insert(grid.rho_values, 0, geom.rho_min)
    v = np.asarray(potential(geom, ModeSpec(mode.k, Chirality.MINUS), rho), dtype=float)
    vp = np.asarray(potential_derivative(geom, mode, rho), dtype=float)
    diag = 2.0 / h**2 + v * v - vp
    m = len(rho)
    sub = np.full(m - 1, -1.0 / h**2)
    sup = np.full(m - 1, -1.0 / h**2)
    vw = v[-1] if wall_at_max else v[0]
    if wall_at_max:
        diag[-1] += 2.0 * vw / h
        sub[-1] = -2.0 / h**2
    else:
        diag[0] += 2.0 * vw / h
        sup[0] = -2.0 / h**2
    off = -np.sqrt(sub * sup)
    return Tridiagonal(diag, off)


def eigen_lowest(
    T: Tridiagonal,
    count: int,
    tol: float = 1e-10,
    vectors: bool = False,
    h: float | None = None,
):
    """Lowest eigenvalues of T by Sturm-sequence bisection, to absolute tol.

    Eigenvectors (inverse iteration) are normalized in the discrete
    L^2(d rho) norm when the spacing h is given, else in the plain l^2 norm.
    Returns an array of eigenvalues, or (values, columns) with vectors.
    """
    if not 1 <= count <= T.dimension:
        raise ValueError("count must lie between 1 and the dimension")
    try:
        if vectors:
            w, vecs = eigh_tridiagonal(
                T.diagonal, T.offdiagonal, select="i",
                select_range=(0, count - 1), tol=tol)
        else:
            w = eigh_tridiagonal(
                T.diagonal, T.offdiagonal, select="i",
                select_range=(0, count - 1), tol=tol, eigvals_only=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NonConvergenceError(str(exc)) from exc
    if not vectors:
        return w
    if h is not None:
        vecs = vecs / np.sqrt(h * np.sum(vecs**2, axis=0))
    return w, vecs


def convergence_order(
    geom: NeckGeometry,
    mode: ModeSpec,
    grid: Grid,
    grid_half: Grid,
    level: int = 0,
    potential_override: Callable[[np.ndarray], np.ndarray] | None = None,
) -> float:
    """Observed discretization order of one eigenvalue from nested grids.

    Richardson-style estimate log2(|mu_h - mu_ref| / |mu_h/2 - mu_ref|)
    against a reference at spacing h/8.
    """
    if grid_half.n == grid.n:
        raise ValueError("grids must be distinct nested refinements")
    if not math.isclose(grid_half.h, grid.h / 2.0, rel_tol=1e-9):
        raise ValueError("second grid must have half the spacing of the first")

    def mu(g: Grid) -> float:
        T = assemble_hamiltonian(geom, mode, g, potential_override)
        return float(eigen_lowest(T, level + 1)[level])

    reference = grid.halved().halved().halved()
    mu_ref = mu(reference)
    return math.log2(abs(mu(grid) - mu_ref) / abs(mu(grid_half) - mu_ref))
