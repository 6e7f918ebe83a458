"""Shared numerical kernels: grids, stencils, quadrature, eigensolvers.

Everything here is a pure function of its inputs; the data types are frozen
after construction and safe to share between threads.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import NonHermitianError, NumericalError

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform 1D grid on [x_min, x_max] with n_points >= 3 samples."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise NumericalError("grid endpoints must be finite")
        if self.x_min >= self.x_max:
            raise NumericalError("grid requires x_min < x_max")
        if self.n_points < 3:
            raise NumericalError("grid requires n_points >= 3")

    @property
    def h(self):
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def refined(self):
        """Grid with halved spacing (same endpoints)."""
        return Grid(self.x_min, self.x_max, 2 * self.n_points - 1)

    def index_nearest(self, x0=0.0):
        return int(np.argmin(np.abs(self.x - x0)))


class HermitianMatrix:
    """Small dense Hermitian matrix; hermiticity enforced at construction."""

    def __init__(self, entries):
        m = np.asarray(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NumericalError("expected a square matrix")
        if not np.all(np.isfinite(m)):
            raise NumericalError("non-finite matrix entries")
        scale = max(np.abs(m).max(), 1.0)
        asym = np.abs(m - m.conj().T)
        if asym.max() > HERMITICITY_TOL * scale:
            i, j = np.unravel_index(np.argmax(asym), asym.shape)
            raise NonHermitianError(int(i), int(j), float(asym[i, j]))
        # symmetrize away the sub-tolerance residue
        self.entries = 0.5 * (m + m.conj().T)

    @property
    def dim(self):
        return self.entries.shape[0]


class BandedHermitian:
    """Hermitian matrix stored by upper diagonals (LAPACK band layout).

    bands[u + i - j, j] == M[i, j] for j - bandwidth <= i <= j.
    """

    def __init__(self, bands):
        b = np.asarray(bands)
        if b.ndim != 2:
            raise NumericalError("band storage must be 2D")
        self.bands = b
        self.bandwidth = b.shape[0] - 1
        self.dim = b.shape[1]

    @classmethod
    def from_dense(cls, m, bandwidth=None):
        m = np.asarray(m)
        n = m.shape[0]
        scale = max(np.abs(m).max(), 1.0)
        asym = np.abs(m - m.conj().T)
        if asym.max() > HERMITICITY_TOL * scale:
            i, j = np.unravel_index(np.argmax(asym), asym.shape)
            raise NonHermitianError(int(i), int(j), float(asym[i, j]))
        if bandwidth is None:
            bandwidth = 0
            for d in range(n - 1, 0, -1):
                if np.abs(np.diagonal(m, d)).max() > 0:
                    bandwidth = d
                    break
        b = np.zeros((bandwidth + 1, n), dtype=m.dtype)
        for d in range(bandwidth + 1):
            b[bandwidth - d, d:] = np.diagonal(m, d)
        return cls(b)

    def to_dense(self):
        n, u = self.dim, self.bandwidth
        m = np.zeros((n, n), dtype=self.bands.dtype)
        for d in range(u + 1):
            idx = np.arange(n - d)
            m[idx, idx + d] = self.bands[u - d, d:]
        out = m + np.conj(np.triu(m, 1)).T
        return out


def eigh_small(m):
    """Full eigendecomposition of a small (dim <= 8) Hermitian matrix.

    Returns (eigenvalues ascending, eigenvectors as columns).
    """
    if not isinstance(m, HermitianMatrix):
        m = HermitianMatrix(m)
    if m.dim > 8:
        raise NumericalError(f"eigh_small is restricted to dim <= 8, got {m.dim}")
    w, v = np.linalg.eigh(m.entries)
    return w, v


def eigh_banded(m, eigenvectors=False):
    """Full spectrum of a BandedHermitian; optionally the eigenvectors too."""
    if not np.all(np.isfinite(m.bands)):
        raise NumericalError("non-finite entries in banded matrix")
    if eigenvectors:
        w, v = scipy.linalg.eig_banded(m.bands, lower=False)
        return w, v
    w = scipy.linalg.eig_banded(m.bands, lower=False, eigvals_only=True)
    return w


def diff_central(samples, grid):
    """O(h^2) first derivative: central interior, one-sided at the ends."""
    f = np.asarray(samples)
    n = f.shape[-1]
    if n < 3:
        raise NumericalError("diff_central needs at least 3 samples")
    if n != grid.n_points:
        raise NumericalError("sample count does not match grid")
    h = grid.h
    d = np.empty_like(f)
    d[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2 * h)
    d[..., 0] = (-3 * f[..., 0] + 4 * f[..., 1] - f[..., 2]) / (2 * h)
    d[..., -1] = (3 * f[..., -1] - 4 * f[..., -2] + f[..., -3]) / (2 * h)
    return d


def integrate_cumulative(samples, grid):
    """Trapezoidal antiderivative, anchored to 0 at the point nearest x=0."""
    f = np.asarray(samples)
    if not np.all(np.isfinite(f)):
        raise NumericalError("non-finite samples")
    if f.shape[-1] != grid.n_points:
        raise NumericalError("sample count does not match grid")
    h = grid.h
    steps = 0.5 * h * (f[..., 1:] + f[..., :-1])
    out = np.concatenate(
        [np.zeros(f.shape[:-1] + (1,), dtype=steps.dtype), np.cumsum(steps, axis=-1)],
        axis=-1,
    )
    anchor = grid.index_nearest(0.0)
    return out - out[..., anchor : anchor + 1]


class QuadRoots(NamedTuple):
    roots: tuple
    discriminant: float


def quad_roots(p2, p1, p0):
    """Real roots of p2*y^2 + p1*y + p0, ascending.

    Uses the q = -(p1 + sign(p1)*sqrt(disc))/2 form so neither root suffers
    cancellation. Degenerate p2 = 0 falls back to the linear solution.
    """
    if p2 == 0.0 and p1 == 0.0 and p0 == 0.0:
        raise NumericalError("quad_roots: all coefficients zero")
    if p2 == 0.0:
        if p1 == 0.0:
            return QuadRoots((), np.inf)  # p0 != 0: no roots
        return QuadRoots((-p0 / p1,), np.nan)
    disc = p1 * p1 - 4.0 * p2 * p0
    if disc < 0.0:
        return QuadRoots((), disc)
    s = np.sqrt(disc)
    if p1 >= 0.0:
        q = -0.5 * (p1 + s)
    else:
        q = -0.5 * (p1 - s)
    if q == 0.0:  # p1 == 0 and p0 == 0
        r = (0.0, 0.0) if disc == 0.0 else tuple(sorted((-s / (2 * p2), s / (2 * p2))))
        return QuadRoots(r, disc)
    r1 = q / p2
    r2 = p0 / q
    return QuadRoots(tuple(sorted((r1, r2))), disc)
