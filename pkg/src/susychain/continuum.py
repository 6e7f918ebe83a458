"""Continuum Dirac-type operators for the saw chain.

The low-energy operator acts on three-component spinors as

    H = -i * kinetic_scale * gamma * d/dx + V(x),

where gamma couples the first two components only and V(x) is a 3x3
Hermitian potential. Constant potentials are summarized by their
asymptotic cell, whose symbol eigenvalues give the band thresholds.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericalError
from .numcore import BandedHermitian, Grid

GAMMA = np.array([[0.0, 1.0, 0.0],
                  [1.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0]])


def potential_matrix(v11, v12, v13, v23, scalar_v, flat_energy):
    """Assemble the 3x3 Hermitian potential from its real components."""
    return np.array([
        [v11 + scalar_v, -1j * v12, -1j * v13],
        [1j * v12, -v11 + scalar_v, v23],
        [1j * v13, v23, flat_energy],
    ])


@dataclass(frozen=True)
class DiracOperatorSpec:
    """-i*kinetic_scale*gamma*d/dx + potential(x)."""

    potential: Callable[[float], np.ndarray]
    kinetic_scale: float = 1.0

    def __post_init__(self):
        if self.kinetic_scale == 0.0:
            raise NumericalError("kinetic scale must be nonzero")


@dataclass(frozen=True)
class AsymptoticCell:
    """Constant potential data on one spatial side (x -> +inf or -inf)."""

    v11: float
    v12: float
    v13: float
    v23: float
    flat_energy: float

    @property
    def decoupled(self):
        return self.v13 == 0.0 and self.v23 == 0.0


def continuum_limit(p):
    """Dirac operator obtained by expanding H(k) around the zone corner.

    Valid in the regime t_ab ~ t_ab_inter where the two dispersive bands
    nearly touch at k = pi/a. The potential is constant: diagonal
    (eps_a, eps_b, eps_c), AB mass/dimerization split, and the static
    inter-chain couplings. kinetic_scale = t_ab_inter * a; rescale x to
    normalize it to 1.
    """
    if p.t_ab_inter == 0.0:
        raise NumericalError("no Dirac expansion for t_ab_inter = 0")
    v11 = 0.5 * (p.eps_a - p.eps_b)
    scalar_v = 0.5 * (p.eps_a + p.eps_b)
    v12 = p.t_ab - p.t_ab_inter
    v13 = p.t_ac
    v23 = p.t_bc
    flat_energy = p.eps_c
    mat = potential_matrix(v11, v12, v13, v23, scalar_v, flat_energy)

    def potential(x):
        return mat

    return DiracOperatorSpec(potential=potential, kinetic_scale=p.t_ab_inter * p.a)


def symbol_matrix(cell, k):
    return GAMMA * k + potential_matrix(cell.v11, cell.v12, cell.v13,
                                        cell.v23, 0.0, cell.flat_energy)


def symbol_dispersion(cell, k):
    """Ascending eigenvalues of the constant-coefficient symbol at momentum k.

    For a decoupled cell (v13 = v23 = 0) these are flat_energy and
    +-sqrt(k^2 + v11^2 + v12^2).
    """
    return np.linalg.eigvalsh(symbol_matrix(cell, k))


def threshold_scan(cell):
    """Continuum band edges (E-, E+) and the flat energy.

    The dispersive branches attain their extrema at k = 0, giving edges
    +-sqrt(v11^2 + v12^2). Only decoupled asymptotic cells are supported.
    """
    if not cell.decoupled:
        raise NumericalError(
            "threshold_scan requires a decoupled asymptotic cell "
            "(v13 = v23 = 0)"
        )
    edge = float(np.hypot(cell.v11, cell.v12))
    return -edge, edge, cell.flat_energy


def discretize(spec, grid):
    """Finite-difference matrix of the Dirac operator on a grid.

    -i d/dx becomes the antisymmetric central-difference stencil (times
    -i, hence Hermitian); the potential is sampled pointwise; the chain
    is simply truncated at the box walls. Point-major ordering keeps the
    bandwidth at 4.
    """
    n = grid.n_points
    x = grid.x
    dim = 3 * n
    bands = np.zeros((5, dim), dtype=complex)
    for i, xi in enumerate(x):
        v = np.asarray(spec.potential(xi), dtype=complex)
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"non-finite potential sample at x={xi:.6g}")
        base = 3 * i
        for a in range(3):
            for b in range(a, 3):
                bands[4 + (base + a) - (base + b), base + b] = v[a, b]
    # kinetic blocks between neighboring points: -i * scale * gamma / (2h)
    hop = -1j * spec.kinetic_scale / (2 * grid.h) * GAMMA
    for i in range(n - 1):
        for a in range(3):
            for b in range(3):
                if hop[a, b] != 0:
                    row, col = 3 * i + a, 3 * (i + 1) + b
                    bands[4 + row - col, col] = hop[a, b]
    return BandedHermitian(bands)


def operator_spec_from_components(components):
    """DiracOperatorSpec sampling a PotentialComponents table (nearest x)."""
    x = components.grid.x

    def potential(xq):
        i = int(np.argmin(np.abs(x - xq)))
        return components.matrix_at(i)

    return DiracOperatorSpec(potential=potential)


def apply_dirac(spec_or_potential, state, grid, kinetic_scale=1.0):
    """Apply -i*scale*gamma*d/dx + V(x) to a sampled (3, n) spinor."""
    from .numcore import diff_central

    if isinstance(spec_or_potential, DiracOperatorSpec):
        vfun = spec_or_potential.potential
        kinetic_scale = spec_or_potential.kinetic_scale
    else:
        vfun = spec_or_potential
    f = np.asarray(state, dtype=complex)
    df = diff_central(f, grid)
    out = -1j * kinetic_scale * (GAMMA @ df)
    for i, xi in enumerate(grid.x):
        out[:, i] += np.asarray(vfun(xi), dtype=complex) @ f[:, i]
    return out
