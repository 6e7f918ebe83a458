"""Saw-chain tight-binding model.

Three sites (A, B, C) per cell. Intra-cell bonds t_ab, t_ac, t_bc; the
inter-cell bond t_ab_inter connects A_n with B_{n-1}. The momentum-space
Hamiltonian is

    H(k) = [[eps_a,               t_ab + t_ab_inter*e^{-ika}, t_ac ],
            [conj(...),           eps_b,                      t_bc ],
            [t_ac,                t_bc,                       eps_c]]

and the on-site energy eps_c can be fine-tuned so that one root of the
secular determinant becomes k-independent (a flat band).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateDispersionError, NumericalError
from .numcore import BandedHermitian, HermitianMatrix, eigh_banded, eigh_small, quad_roots


@dataclass(frozen=True)
class TightBindingParams:
    eps_a: float = 0.0
    eps_b: float = 0.0
    eps_c: float = 0.0
    t_ab: float = 0.0
    t_ab_inter: float = 0.0
    t_ac: float = 0.0
    t_bc: float = 0.0
    a: float = 1.0

    def __post_init__(self):
        vals = (self.eps_a, self.eps_b, self.eps_c, self.t_ab,
                self.t_ab_inter, self.t_ac, self.t_bc, self.a)
        if not all(np.isfinite(v) for v in vals):
            raise NumericalError("tight-binding parameters must be finite")
        if self.a <= 0:
            raise NumericalError("lattice constant must be positive")


@dataclass(frozen=True)
class BandStructure:
    k: np.ndarray
    energies: np.ndarray  # shape (nk, 3), ascending per k

    def band(self, j):
        return self.energies[:, j]

    def spreads(self):
        """max_k - min_k of each band."""
        return self.energies.max(axis=0) - self.energies.min(axis=0)


@dataclass(frozen=True)
class FlatBandSolution:
    """One fine-tuned (eps_c, flat energy) pair.

    The secular determinant factorizes as
        det(H - E) = -(E - flat_energy) * (E^2 + quad_lin*E + a0(k)),
    with a0(k) = quad_const + quad_cos * cos(k a).
    """

    eps_c: float
    flat_energy: float
    quad_lin: float
    quad_const: float
    quad_cos: float


def bloch_hamiltonian(p, k):
    """3x3 Bloch Hamiltonian of the saw chain at quasi-momentum k."""
    if not np.isfinite(k):
        raise NumericalError("k must be finite")
    off = p.t_ab + p.t_ab_inter * np.exp(-1j * k * p.a)
    return HermitianMatrix([
        [p.eps_a, off, p.t_ac],
        [np.conj(off), p.eps_b, p.t_bc],
        [p.t_ac, p.t_bc, p.eps_c],
    ])


def default_k_grid(p, n=513):
    """Uniform k-grid over one Brillouin zone, both edges included."""
    return np.linspace(-np.pi / p.a, np.pi / p.a, n)


def band_structure(p, k_grid):
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.size == 0:
        raise NumericalError("empty k-grid")
    energies = np.empty((k_grid.size, 3))
    for i, k in enumerate(k_grid):
        w, _ = eigh_small(bloch_hamiltonian(p, k))
        energies[i] = w
    return BandStructure(k_grid, energies)


def det_secular(p, k, energy):
    """det(H(k) - energy), evaluated from the closed-form expansion."""
    d1 = p.eps_a - energy
    d2 = p.eps_b - energy
    d3 = p.eps_c - energy
    cos_ka = np.cos(k * p.a)
    b2 = p.t_ab**2 + p.t_ab_inter**2 + 2 * p.t_ab * p.t_ab_inter * cos_ka
    re_b = p.t_ab + p.t_ab_inter * cos_ka
    return (d1 * d2 * d3 - d1 * p.t_bc**2 - d2 * p.t_ac**2
            - b2 * d3 + 2 * p.t_ac * p.t_bc * re_b)


def tune_flat_band(p):
    """Solve for the eps_c values that make one band exactly flat.

    The cos(ka) coefficient of det(H - E) vanishes iff
        eps_c - E = t_ac * t_bc / t_ab,
    and substituting that constant back leaves a k-independent quadratic in
    the flat energy, solved here in closed form. Returns 0, 1 or 2
    solutions, ascending in flat energy; eps_c of the input is ignored.
    """
    if p.t_ab == 0.0 or p.t_ab_inter == 0.0:
        raise DegenerateDispersionError(
            "flat-band tuning needs t_ab != 0 and t_ab_inter != 0"
        )
    if p.t_ac == 0.0 and p.t_bc == 0.0:
        raise DegenerateDispersionError(
            "C chain decoupled (t_ac = t_bc = 0): every eps_c gives a flat "
            "band at eps_c; tuning is ill-posed"
        )
    r = p.t_ac * p.t_bc / p.t_ab
    p2 = r
    p1 = -r * (p.eps_a + p.eps_b) + p.t_bc**2 + p.t_ac**2
    p0 = (p.eps_a * p.eps_b * r - p.eps_a * p.t_bc**2 - p.eps_b * p.t_ac**2
          - (p.t_ab**2 + p.t_ab_inter**2) * r + 2 * p.t_ab * p.t_ac * p.t_bc)
    res = quad_roots(p2, p1, p0)
    solutions = []
    for e_flat in res.roots:
        eps_c = e_flat + r
        quad_lin = e_flat - (p.eps_a + p.eps_b + eps_c)
        quad_cos = -2 * p.t_ab * p.t_ab_inter
        quad_const = (quad_lin * e_flat
                      + p.eps_a * p.eps_b + (p.eps_a + p.eps_b) * eps_c
                      - p.t_bc**2 - p.t_ac**2 - (p.t_ab**2 + p.t_ab_inter**2))
        solutions.append(FlatBandSolution(eps_c, e_flat, quad_lin, quad_const, quad_cos))
    return solutions


def flat_band_residual(p, sol, n_k=256):
    """max_k |det(H(k) - flat_energy)| with eps_c set to the tuned value."""
    tuned = replace(p, eps_c=sol.eps_c)
    k = default_k_grid(p, n_k)
    return float(np.abs(det_secular(tuned, k, sol.flat_energy)).max())


@dataclass(frozen=True)
class ChainProfile:
    """Per-cell saw-chain parameters of a finite open chain."""

    eps_a: np.ndarray
    eps_b: np.ndarray
    eps_c: np.ndarray
    t_ab: np.ndarray
    t_ab_inter: np.ndarray
    t_ac: np.ndarray
    t_bc: np.ndarray
    x: np.ndarray = None  # optional cell-center positions

    def __post_init__(self):
        n = len(self.eps_a)
        arrays = [self.eps_a, self.eps_b, self.eps_c, self.t_ab,
                  self.t_ab_inter, self.t_ac, self.t_bc]
        for arr in arrays:
            if len(arr) != n:
                raise NumericalError("profile arrays must share one length")
            if not np.all(np.isfinite(arr)):
                raise NumericalError("non-finite profile entries")

    @property
    def n_cells(self):
        return len(self.eps_a)

    @classmethod
    def uniform(cls, p, n_cells):
        ones = np.ones(n_cells)
        return cls(p.eps_a * ones, p.eps_b * ones, p.eps_c * ones,
                   p.t_ab * ones, p.t_ab_inter * ones,
                   p.t_ac * ones, p.t_bc * ones)


def build_finite_chain(profile):
    """Open-boundary 3N x 3N hopping matrix, site order (A_n, B_n, C_n).

    The only inter-cell bond is t_ab_inter(n) between A_n and B_{n-1},
    so the matrix is banded with bandwidth 2.
    """
    n = profile.n_cells
    if n < 2:
        raise NumericalError("need at least 2 cells")
    dim = 3 * n
    bands = np.zeros((3, dim))
    # diagonal (row 2 of band storage)
    bands[2, 0::3] = profile.eps_a
    bands[2, 1::3] = profile.eps_b
    bands[2, 2::3] = profile.eps_c
    # first superdiagonal: (A_n, B_n) and (B_n, C_n)
    bands[1, 1::3] = profile.t_ab
    bands[1, 2::3] = profile.t_bc
    # second superdiagonal: (A_n, C_n) and (B_{n-1}, A_n)
    bands[0, 2::3] = profile.t_ac
    bands[0, 3::3] = profile.t_ab_inter[1:]
    return BandedHermitian(bands)


@dataclass(frozen=True)
class SpectrumReport:
    """Spectral summary of a finite chain or discretized operator."""

    eigenvalues: np.ndarray
    flat_energy: float
    cluster_tol: float
    cluster_count: int
    gap_edge_neg: float  # largest bulk eigenvalue below the cluster (nan if none)
    gap_edge_pos: float  # smallest bulk eigenvalue above the cluster (nan if none)
    ipr: np.ndarray = None
    edge_state_mask: np.ndarray = None
    notes: tuple = field(default_factory=tuple)


def inverse_participation_ratio(vectors):
    """IPR of each column: sum|v|^4 / (sum|v|^2)^2; 1/dim for extended states."""
    p = np.abs(vectors) ** 2
    return (p**2).sum(axis=0) / p.sum(axis=0) ** 2


def _edge_mask(vectors, sites_per_point, edge_fraction=0.05, mass_threshold=0.5):
    """True for states with >= mass_threshold of weight in the outer cells."""
    dim = vectors.shape[0]
    n_pts = dim // sites_per_point
    n_edge = max(1, int(np.ceil(edge_fraction * n_pts)))
    w = np.abs(vectors) ** 2
    w = w / w.sum(axis=0)
    cells = w.reshape(n_pts, sites_per_point, -1).sum(axis=1)
    edge_mass = cells[:n_edge].sum(axis=0) + cells[-n_edge:].sum(axis=0)
    return edge_mass >= mass_threshold


def chain_spectrum(chain, flat_energy=0.0, cluster_tol=1e-6, window=None,
                   gap_exclusion=None, sites_per_point=3):
    """Diagonalize a banded chain and summarize its spectrum.

    Eigenvalues within cluster_tol of flat_energy form the flat-band
    cluster. Gap edges are the nearest remaining eigenvalues on either
    side, after discarding edge-localized states (>= 50% of weight in
    the outer 5% of cells) and everything within gap_exclusion of
    flat_energy (finite-size members of the flat cluster can leak
    slightly past cluster_tol; default gap_exclusion = cluster_tol).
    """
    w, v = eigh_banded(chain, eigenvectors=True)
    ipr = inverse_participation_ratio(v)
    edge = _edge_mask(v, sites_per_point)
    if window is not None:
        keep = (w >= window[0]) & (w <= window[1])
        w, ipr, edge = w[keep], ipr[keep], edge[keep]
    if gap_exclusion is None:
        gap_exclusion = cluster_tol
    in_cluster = np.abs(w - flat_energy) <= cluster_tol
    bulk = (np.abs(w - flat_energy) > max(gap_exclusion, cluster_tol)) & ~edge
    below = w[bulk & (w < flat_energy)]
    above = w[bulk & (w > flat_energy)]
    return SpectrumReport(
        eigenvalues=w,
        flat_energy=flat_energy,
        cluster_tol=cluster_tol,
        cluster_count=int(in_cluster.sum()),
        gap_edge_neg=float(below.max()) if below.size else float("nan"),
        gap_edge_pos=float(above.min()) if above.size else float("nan"),
        ipr=ipr,
        edge_state_mask=edge,
    )
