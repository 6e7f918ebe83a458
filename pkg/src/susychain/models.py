"""The two closed-form coupled-chain models.

Both are two-parameter (mass m, flat energy lambda) specializations of the
Darboux engine in which the quadrature constants are chosen so that w0 and
c1 drop out of the final potential. They serve as analytic oracles for the
general pipeline and as sources of finite-chain profiles.

Model I:  gauge A = sqrt(m(m - lambda)), kappa = sqrt((m - lambda)(2m + lambda)).
          Regular for -2m < lambda < m (m > 0). Continuum spectrum
          (-inf, -sqrt(m(2m - lambda))] u [sqrt(m(2m - lambda)), inf) u {lambda}.
Model II: gauge A = m, kappa = sqrt(2 m^2 - lambda^2), regular for
          lambda^2 < 2 m^2. The dimerization component v12 is exactly the
          constant -lambda. Its band edges +-sqrt(2)*|m| are derived here
          from the asymptotics (no published spectrum); reports flag them
          as derived.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .continuum import AsymptoticCell
from .errors import NumericalError
from .lattice import ChainProfile
from .numcore import Grid
from .susy import PotentialComponents, SeedData


class ModelKind(enum.Enum):
    I = "I"
    II = "II"


@dataclass(frozen=True)
class ModelParams:
    kind: ModelKind
    mass: float
    flat_energy: float

    @property
    def gauge_a(self):
        if self.kind is ModelKind.I:
            return float(np.sqrt(self.mass * (self.mass - self.flat_energy)))
        return self.mass

    @property
    def kappa(self):
        m, lam = self.mass, self.flat_energy
        if self.kind is ModelKind.I:
            return float(np.sqrt((m - lam) * (2 * m + lam)))
        return float(np.sqrt(2 * m**2 - lam**2))

    @property
    def omega(self):
        m, lam = self.mass, self.flat_energy
        if self.kind is ModelKind.I:
            return -4 * m / (np.sqrt(m * (m - lam)) * (2 * m + lam))
        return -2 * (2 * m - lam) / (2 * m**2 - lam**2)

    def seed_data(self, w0=1.0, c1=0.0):
        """SeedData realizing this model in the general engine."""
        return SeedData(
            mass=self.mass,
            flat_energy=self.flat_energy,
            gauge_a=self.gauge_a,
            epsilon=self.mass,
            c0=w0 * self.omega + c1,
            c1=c1,
            w0=w0,
        )


def validate_params(p):
    """List of violated admissibility conditions (empty means ok)."""
    m, lam = p.mass, p.flat_energy
    out = []
    if not (np.isfinite(m) and np.isfinite(lam)):
        return ["mass and flat_energy must be finite"]
    if p.kind is ModelKind.I:
        if m * (m - lam) <= 0:
            out.append(f"m(m - lambda) = {m * (m - lam):.3e} must be > 0")
        if not (-2 * m < lam):
            out.append(f"-2m < lambda violated (lambda = {lam:g}, m = {m:g})")
        if not (lam < m):
            out.append(f"lambda < m violated (lambda = {lam:g}, m = {m:g})")
        if not (2 * m + lam > 0):
            out.append("2m + lambda must be > 0")
    else:
        if not (lam**2 < 2 * m**2):
            out.append(f"lambda^2 < 2 m^2 violated (lambda^2 = {lam**2:g}, "
                       f"2m^2 = {2 * m**2:g})")
    if abs(lam) == abs(m):
        out.append("|lambda| = |m| is excluded")
    if not out:
        # the model kappa must equal the seed kappa0
        kappa0 = float(np.sqrt(p.gauge_a**2 + m**2 - lam**2))
        if abs(p.kappa - kappa0) > 1e-14 * max(1.0, p.kappa):
            out.append("internal: kappa != kappa0")
    return out


def _require_valid(p):
    violations = validate_params(p)
    if violations:
        raise NumericalError("invalid model parameters: " + "; ".join(violations))


def model1_potential(p, x):
    """Closed-form potential components of Model I."""
    if p.kind is not ModelKind.I:
        raise NumericalError("model1_potential requires a Model I parameter set")
    _require_valid(p)
    m, lam, k = p.mass, p.flat_energy, p.kappa
    x = np.asarray(x, dtype=float)
    sech2 = 1.0 / np.cosh(2 * k * x)
    tanh2 = np.tanh(2 * k * x)
    cosh2 = np.cosh(2 * k * x)
    root = np.sqrt(m * (m - lam))
    den_a = 2 * m - lam + 4 * m * sech2
    den_b = 4 * m + (2 * m - lam) * cosh2
    v12 = -lam * (2 * root * (1 + sech2) - k * tanh2) / den_a
    v13 = np.sqrt(m * (2 * m + lam)) * k / den_b
    v23 = k**2 / den_b
    v11 = -(lam**2 + 4 * m**2 * sech2 + 2 * root * k * tanh2) / den_a
    return v11, v12, v13, v23


def model2_potential(p, x):
    """Closed-form potential components of Model II."""
    if p.kind is not ModelKind.II:
        raise NumericalError("model2_potential requires a Model II parameter set")
    _require_valid(p)
    m, lam, k = p.mass, p.flat_energy, p.kappa
    x = np.asarray(x, dtype=float)
    sech2 = 1.0 / np.cosh(2 * k * x)
    tanh2 = np.tanh(2 * k * x)
    cosh2 = np.cosh(2 * k * x)
    v12 = -lam * np.ones_like(x)
    v13 = (m - lam) * k**2 / ((2 * m - lam) ** 2 + 2 * (m - lam) ** 2 * cosh2)
    v23 = v13.copy()
    v11 = (-k * ((2 * m - lam) * k * sech2 + 2 * (m - lam) ** 2 * tanh2)
           / (2 * (m - lam) ** 2 + (2 * m - lam) ** 2 * sech2))
    return v11, v12, v13, v23


def model_potential(p, x):
    if p.kind is ModelKind.I:
        return model1_potential(p, x)
    return model2_potential(p, x)


def model_potential_components(p, grid):
    """PotentialComponents table of either model on a grid."""
    v11, v12, v13, v23 = model_potential(p, grid.x)
    return PotentialComponents(grid, v11, v12, v13, v23, 0.0, p.flat_energy)


def asymptotic_cell(p, side):
    """Constant potential limit on one side (+1 for x -> +inf)."""
    m, lam, k = p.mass, p.flat_energy, p.kappa
    s = 1.0 if side > 0 else -1.0
    if p.kind is ModelKind.I:
        root = np.sqrt(m * (m - lam))
        v12 = s * k * lam / (2 * m - lam) - 2 * root * lam / (2 * m - lam)
        v11 = -s * 2 * k * root / (2 * m - lam) - lam**2 / (2 * m - lam)
    else:
        v12 = -lam
        v11 = -s * k
    return AsymptoticCell(v11=float(v11), v12=float(v12), v13=0.0, v23=0.0,
                          flat_energy=lam)


@dataclass(frozen=True)
class AnalyticSpectrum:
    gap_edge: float  # continuum bands are (-inf, -edge] u [edge, inf)
    flat_energy: float
    derived_not_published: bool


def model1_spectrum(p):
    """Band edges +-sqrt(m(2m - lambda)) plus the flat level."""
    if p.kind is not ModelKind.I:
        raise NumericalError("model1_spectrum requires a Model I parameter set")
    _require_valid(p)
    m, lam = p.mass, p.flat_energy
    edge = float(np.sqrt(m * (2 * m - lam)))
    # consistency with the asymptotics: v11^2 + v12^2 = m(2m - lambda)
    cell = asymptotic_cell(p, +1)
    if abs(cell.v11**2 + cell.v12**2 - edge**2) > 1e-12 * max(1.0, edge**2):
        raise NumericalError("asymptotic identity v11^2 + v12^2 = m(2m - lambda) failed")
    return AnalyticSpectrum(gap_edge=edge, flat_energy=lam,
                            derived_not_published=False)


def model2_thresholds(p):
    """Derived band edges +-sqrt(2)*|m| (independent of lambda)."""
    if p.kind is not ModelKind.II:
        raise NumericalError("model2_thresholds requires a Model II parameter set")
    _require_valid(p)
    cell = asymptotic_cell(p, +1)
    edge = float(np.hypot(cell.v11, cell.v12))
    return AnalyticSpectrum(gap_edge=edge, flat_energy=p.flat_energy,
                            derived_not_published=True)


def model_spectrum(p):
    if p.kind is ModelKind.I:
        return model1_spectrum(p)
    return model2_thresholds(p)


def sample_chain_profile(p, n_cells, box_halfwidth=None):
    """Finite saw-chain profile realizing the model potential.

    Cell centers are uniform over [-box, box]; with the default box
    n_cells/2 the cell spacing equals the lattice constant a = 1, which is
    the regularization consistent with t_ab_inter = 1. The potential is
    sampled once per cell (shared by the A, B, C sites).
    """
    if n_cells < 2:
        raise NumericalError("need at least 2 cells")
    if box_halfwidth is None:
        box_halfwidth = n_cells / 2.0
    x = np.linspace(-box_halfwidth, box_halfwidth, n_cells)
    v11, v12, v13, v23 = model_potential(p, x)
    t_inter = np.ones(n_cells)
    return ChainProfile(
        eps_a=v11,
        eps_b=-v11,
        eps_c=np.full(n_cells, p.flat_energy),
        t_ab=t_inter + v12,
        t_ab_inter=t_inter,
        t_ac=v13,
        t_bc=v23,
        x=x,
    )
