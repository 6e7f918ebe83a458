"""Flat-band engineering of saw chains via Darboux-coupled Dirac operators."""

from .continuum import (
    GAMMA,
    AsymptoticCell,
    DiracOperatorSpec,
    continuum_limit,
    discretize,
    symbol_dispersion,
    threshold_scan,
)
from .errors import (
    ConfigError,
    DegenerateDispersionError,
    NonHermitianError,
    NumericalError,
    SingularFrameError,
    SusychainError,
)
from .lattice import (
    BandStructure,
    ChainProfile,
    FlatBandSolution,
    SpectrumReport,
    TightBindingParams,
    band_structure,
    bloch_hamiltonian,
    build_finite_chain,
    chain_spectrum,
    tune_flat_band,
)
from .models import (
    AnalyticSpectrum,
    ModelKind,
    ModelParams,
    model1_potential,
    model1_spectrum,
    model2_potential,
    model2_thresholds,
    sample_chain_profile,
    validate_params,
)
from .numcore import (
    BandedHermitian,
    Grid,
    HermitianMatrix,
    diff_central,
    eigh_banded,
    eigh_small,
    integrate_cumulative,
    quad_roots,
)
from .susy import (
    PotentialComponents,
    SeedData,
    TransformationFrame,
    apply_darboux,
    assemble_frame,
    hermitize_xi1,
    intertwining_residual,
    inverse_dagger_states,
    seed_epsilon_state,
    seed_lambda_states,
    transformed_potential,
)

__version__ = "0.1.0"
