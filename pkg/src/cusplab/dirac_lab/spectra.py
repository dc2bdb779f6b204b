"""Spectral sweeps over the pinching parameter, masses, and resolvent traces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cusplab.dirac_lab.geometry import Chirality, ModeSpec, NeckGeometry
from cusplab.dirac_lab.solver import Grid, assemble_hamiltonian, eigen_lowest


class SpectralCollisionError(ValueError):
    """A resolvent point fell on (or numerically too close to) an eigenvalue."""

    def __init__(self, mu: float, lam: float) -> None:
        self.mu = mu
        self.lam = lam
        super().__init__(f"eigenvalue {mu!r} collides with resolvent point {lam!r}")


@dataclass(frozen=True)
class SpectrumParams:
    """Parameters of a spectral computation.

    ``k_max`` bounds the mode index (modes k and -k-1 form a degenerate
    pair, so only k = 0..k_max are solved), ``levels`` is the eigenvalue
    count per mode, ``h``/``n`` fix the grid (default spacing length/4000),
    ``rho_margin_factor`` controls the t = 0 cusp truncation depth, and
    ``keep_vectors`` stores eigenvectors for levels j <= keep_vectors.
    """

    k_max: int = 2
    levels: int = 8
    h: float | None = None
    n: int | None = None
    rho_margin_factor: float = 50.0
    tol: float = 1e-10
    keep_vectors: int = 0

    def __post_init__(self) -> None:
        if self.k_max < 0 or self.levels < 1:
            raise ValueError("need k_max >= 0 and levels >= 1")
        if self.rho_margin_factor < 50.0:
            raise ValueError("rho_margin_factor must be at least 50")


@dataclass(frozen=True)
class SpectrumRow:
    """One eigenvalue: pinching parameter t, mode k, level j (1-based)."""

    t: float
    k: int
    j: int
    mu: float
    lam: float


@dataclass(frozen=True)
class VectorHandle:
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values.setflags(write=False)


@dataclass(frozen=True)
class SpectrumTable:
    """Eigenvalue rows sorted by (t, lam, k, j), with optional eigenvectors."""

    rows: tuple[SpectrumRow, ...]
    vectors: tuple[tuple[tuple[float, int, int], VectorHandle], ...] = ()

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.rows, key=lambda r: (-r.t, r.lam, r.k, r.j)))
        object.__setattr__(self, "rows", ordered)

    def rows_at(self, t: float) -> list[SpectrumRow]:
        return [r for r in self.rows if r.t == t]

    def t_values(self) -> list[float]:
        out: list[float] = []
        for r in self.rows:
            if r.t not in out:
                out.append(r.t)
        return out

    def eigen_count(self, a: float, b: float, t: float) -> int:
        """Eigenvalues with lam in (a, b) at parameter t, pair multiplicity 2."""
        return 2 * sum(1 for r in self.rows_at(t) if a < r.lam < b)

    def lowest(self, t: float) -> SpectrumRow:
        rows = self.rows_at(t)
        if not rows:
            raise KeyError(f"no rows at t = {t}")
        return rows[0]

    def vector(self, t: float, k: int, j: int) -> VectorHandle:
        for key, handle in self.vectors:
            if key == (t, k, j):
                return handle
        raise KeyError(f"no stored eigenvector for (t, k, j) = {(t, k, j)}")

    def merged(self, other: "SpectrumTable") -> "SpectrumTable":
        return SpectrumTable(self.rows + other.rows, self.vectors + other.vectors)


def _grid_for(geom: NeckGeometry, params: SpectrumParams) -> Grid:
    return Grid.for_geometry(geom, n=params.n, h=params.h)


def _cusp_geometry(params: SpectrumParams) -> NeckGeometry:
    """Truncated cusp deep enough that V(rho_min) >= margin * sqrt(mu_max).

    The requirement is checked against the computed spectrum for the most
    permissive mode (k = 0, smallest V) and the domain is deepened until it
    holds; deepening only lowers eigenvalues, so the loop terminates.
    """
    margin = params.rho_margin_factor
    q_min = 0.5
    rho_min = -math.log(margin * math.sqrt(200.0) / q_min)
    for _ in range(8):
        geom = NeckGeometry.cusp(rho_min)
        grid = _grid_for(geom, params)
        mu_max = 0.0
        for k in range(params.k_max + 1):
            for chi in (Chirality.PLUS, Chirality.MINUS):
                T = assemble_hamiltonian(geom, ModeSpec(k, chi), grid)
                mu_max = max(mu_max, float(eigen_lowest(T, params.levels)[-1]))
        needed = -math.log(margin * math.sqrt(mu_max) / q_min)
        if rho_min <= needed:
            return geom
        rho_min = needed - 0.5
    raise RuntimeError("cusp truncation depth did not stabilize")


def _mode_levels(geom: NeckGeometry, grid: Grid, k: int, params: SpectrumParams):
    """Lowest eigenpairs of the mode pair (k, -k-1) at this geometry.

    For t > 0 the plus operator suffices: the partner mode's operator is its
    parity conjugate on the symmetric neck.  At t = 0 the neck has split into
    two mirror cusps and the pair's spectrum on the split surface is the
    union of the plus and minus spectra on one cusp branch, merged sorted.
    """
    want_vecs = params.keep_vectors > 0
    chis = (Chirality.PLUS,) if geom.t > 0 else (Chirality.PLUS, Chirality.MINUS)
    merged: list[tuple[float, np.ndarray | None]] = []
    for chi in chis:
        T = assemble_hamiltonian(geom, ModeSpec(k, chi), grid)
        if want_vecs:
            mu, vecs = eigen_lowest(T, params.levels, tol=params.tol,
                                    vectors=True, h=grid.h)
            merged.extend((float(m), vecs[:, i].copy()) for i, m in enumerate(mu))
        else:
            mu = eigen_lowest(T, params.levels, tol=params.tol)
            merged.extend((float(m), None) for m in mu)
    merged.sort(key=lambda pair: pair[0])
    return merged[: params.levels]


def dirac_spectrum(t: float, params: SpectrumParams) -> SpectrumTable:
    """Squared-Dirac eigenvalues at parameter t, one row per (mode pair, level).

    Modes k and -k-1 form a degenerate pair (parity on the symmetric neck for
    t > 0; the mirror cusp at t = 0), so each row carries multiplicity 2
    wherever counts or traces are formed.
    """
    geom = NeckGeometry.neck(t) if t > 0 else _cusp_geometry(params)
    grid = _grid_for(geom, params)
    rows: list[SpectrumRow] = []
    vectors: list[tuple[tuple[float, int, int], VectorHandle]] = []
    for k in range(params.k_max + 1):
        for j, (m, vec) in enumerate(_mode_levels(geom, grid, k, params), start=1):
            rows.append(SpectrumRow(t=t, k=k, j=j, mu=m,
                                    lam=math.sqrt(max(m, 0.0))))
            if vec is not None and params.keep_vectors >= j:
                vectors.append(((t, k, j), VectorHandle(grid, vec)))
    return SpectrumTable(tuple(rows), tuple(vectors))


def spectral_sweep(t_grid: Sequence[float], params: SpectrumParams) -> SpectrumTable:
    """Solve every t in a sweep grid (descending, ending at 0) into one table."""
    ts = list(t_grid)
    if sorted(ts, reverse=True) != ts:
        raise ValueError("t grid must be sorted descending")
    if ts[-1] != 0.0:
        raise ValueError("t grid must end at 0 (the split-neck limit)")
    table = SpectrumTable(())
    for t in ts:
        table = table.merged(dirac_spectrum(t, params))
    return table


def neck_mass(t: float, vector: "VectorHandle", w: float) -> float:
    """Fraction of discrete L^2 mass of an eigenvector inside |x| <= w.

    For t > 0 the window maps to |rho| <= asinh(w / t); at t = 0 the profile
    itself is |x|, so the window is phi(rho) <= w.
    """
    if w <= 0:
        raise ValueError("window width must be positive")
    rho = vector.grid.rho_values
    if t > 0:
        inside = np.abs(rho) <= math.asinh(w / t)
    else:
        inside = np.exp(rho) <= w  # right-cusp branch: |x| = e^rho
    if not np.any(inside):
        raise ValueError("window contains no grid points")
    dens = vector.values**2
    return float(np.sum(dens[inside]) / np.sum(dens))


@dataclass(frozen=True)
class TraceValue:
    """A relative-resolvent trace: level-truncated sum plus a tail estimate."""

    value: float
    bare_sum: float
    tail_estimate: float

    def __float__(self) -> float:
        return self.value


def _mode_tail(mu: np.ndarray, lam: float, lam0: float) -> float:
    """Estimate sum over levels beyond the computed ones for one mode.

    The top of the computed spectrum fixes a Weyl-type model
    mu_j ~ A j^2 + c through the largest two eigenvalues; the remaining sum
    of 1/(mu - lam) - 1/(mu - lam0) over that model converges like j^-3 and
    is accumulated until it is exhausted at double precision.
    """
    J = len(mu)
    if J < 2:
        return 0.0
    A = (mu[-1] - mu[-2]) / (2 * J - 1)
    if A <= 0:
        return 0.0
    c = mu[-1] - A * J**2
    total = 0.0
    j = J + 1
    while True:
        muj = A * j * j + c
        term = 1.0 / (muj - lam) - 1.0 / (muj - lam0)
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1.0) or j > 10**7:
            break
        j += 1
    return total


def relative_resolvent_trace(
    t: float,
    lam: float,
    lam0: float,
    params: SpectrumParams,
    collision_tol: float = 1e-9,
    table: SpectrumTable | None = None,
) -> TraceValue:
    """Trace of the resolvent difference at spectral points lam, lam0.

    Sums 1/(mu - lam) - 1/(mu - lam0) over the table rows with the pair
    multiplicity 2 and adds a per-mode tail estimate anchored at the largest
    computed eigenvalues.
    """
    if table is None:
        table = dirac_spectrum(t, params)
    rows = table.rows_at(t)
    if not rows:
        raise ValueError(f"table has no rows at t = {t}")
    if lam == lam0:
        return TraceValue(0.0, 0.0, 0.0)
    for r in rows:
        if min(abs(r.mu - lam), abs(r.mu - lam0)) < collision_tol:
            raise SpectralCollisionError(r.mu, lam if abs(r.mu - lam) < abs(r.mu - lam0) else lam0)
    bare = 0.0
    tail = 0.0
    for k in sorted({r.k for r in rows}):
        mu = np.array([r.mu for r in rows if r.k == k])
        mu.sort()
        bare += 2.0 * float(np.sum(1.0 / (mu - lam) - 1.0 / (mu - lam0)))
        tail += 2.0 * _mode_tail(mu, lam, lam0)
    return TraceValue(bare + tail, bare, tail)
