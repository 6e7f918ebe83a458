"""Unit tests for the continuum Dirac layer."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from susychain.continuum import (
    GAMMA,
    AsymptoticCell,
    DiracOperatorSpec,
    apply_dirac,
    continuum_limit,
    discretize,
    potential_matrix,
    symbol_dispersion,
    threshold_scan,
)
from susychain.errors import NumericalError
from susychain.lattice import TightBindingParams, band_structure
from susychain.numcore import Grid, eigh_banded

finite = st.floats(-2.0, 2.0)


def test_potential_matrix_hermitian():
    v = potential_matrix(0.4, -0.2, 0.1, 0.05, 0.3, 0.7)
    np.testing.assert_allclose(v, v.conj().T, atol=1e-16)
    assert v[0, 0] == pytest.approx(0.7)  # v11 + scalar_v
    assert v[1, 1] == pytest.approx(-0.1)
    assert v[2, 2] == pytest.approx(0.7)
    assert v[0, 1] == pytest.approx(0.2j)


def test_continuum_limit_components():
    p = TightBindingParams(eps_a=0.3, eps_b=-0.1, eps_c=0.05, t_ab=1.2,
                           t_ab_inter=1.0, t_ac=0.2, t_bc=0.01)
    spec = continuum_limit(p)
    assert spec.kinetic_scale == pytest.approx(1.0)
    v = spec.potential(0.0)
    want = potential_matrix(0.2, 0.2, 0.2, 0.01, 0.1, 0.05)
    np.testing.assert_allclose(v, want, atol=1e-15)
    with pytest.raises(NumericalError):
        continuum_limit(TightBindingParams(t_ab=1.0))


def test_continuum_limit_matches_lattice_near_zone_corner():
    # near k = pi/a the two dispersive lattice bands approach
    # +-sqrt(q^2 + v11^2 + v12^2) with q the deviation from the corner
    p = TightBindingParams(eps_a=0.02, eps_b=-0.02, t_ab=1.01,
                           t_ab_inter=1.0, eps_c=10.0)
    cell = AsymptoticCell(v11=0.02, v12=0.01, v13=0.0, v23=0.0,
                          flat_energy=10.0)
    for q in (0.0, 0.01, 0.03):
        k = np.pi - q
        lat = band_structure(p, [k]).energies[0]
        sym = np.sort(symbol_dispersion(cell, q))
        # the C level sits far away; compare the two dispersive bands
        np.testing.assert_allclose(lat[:2], sym[:2], atol=5e-4)


def test_symbol_dispersion_decoupled_closed_form():
    cell = AsymptoticCell(v11=0.3, v12=-0.4, v13=0.0, v23=0.0,
                          flat_energy=0.05)
    for k in (-1.0, 0.0, 0.7):
        w = symbol_dispersion(cell, k)
        e = np.hypot(k, 0.5)
        np.testing.assert_allclose(np.sort(w), np.sort([0.05, -e, e]),
                                   atol=1e-12)


def test_threshold_scan():
    cell = AsymptoticCell(v11=0.06, v12=0.08, v13=0.0, v23=0.0,
                          flat_energy=0.01)
    lo, hi, flat = threshold_scan(cell)
    assert (lo, hi, flat) == pytest.approx((-0.1, 0.1, 0.01))
    with pytest.raises(NumericalError):
        threshold_scan(AsymptoticCell(0.1, 0.1, 0.05, 0.0, 0.0))


@settings(max_examples=50, deadline=None)
@given(v11=finite, v12=finite, k=st.floats(-3.0, 3.0))
def test_threshold_is_symbol_minimum(v11, v12, k):
    cell = AsymptoticCell(v11=v11, v12=v12, v13=0.0, v23=0.0,
                          flat_energy=123.0)
    _, hi, _ = threshold_scan(cell)
    w = symbol_dispersion(cell, k)
    dispersive = np.abs(w[np.abs(w - 123.0) > 1e-9])
    assert dispersive.min() >= hi - 1e-9


def test_discretize_is_hermitian_and_matches_apply():
    m, lam = 0.07, 0.0
    mat = potential_matrix(0.03, -0.02, 0.01, 0.005, 0.0, lam)
    spec = DiracOperatorSpec(potential=lambda x: mat + 0.01 * np.tanh(x) * GAMMA)
    grid = Grid(-5.0, 5.0, 201)
    op = discretize(spec, grid)
    dense = op.to_dense()
    np.testing.assert_allclose(dense, dense.conj().T, atol=1e-14)
    # matrix-vector action agrees with the stencil application away from
    # the box walls (the truncation differs only in the first/last point)
    rng = np.random.default_rng(2)
    f = rng.normal(size=(3, grid.n_points))
    via_matrix = (dense @ f.T.ravel()).reshape(grid.n_points, 3).T
    via_stencil = apply_dirac(spec, f, grid)
    np.testing.assert_allclose(via_matrix[:, 1:-1], via_stencil[:, 1:-1],
                               atol=1e-10)


def test_discretized_free_dirac_spectrum():
    # constant decoupled potential: eigenvalues must respect the gap
    # +-sqrt(v11^2+v12^2) up to O(h^2) and truncation effects
    cell = AsymptoticCell(v11=0.06, v12=0.08, v13=0.0, v23=0.0,
                          flat_energy=0.0)
    mat = potential_matrix(cell.v11, cell.v12, 0.0, 0.0, 0.0, 0.0)
    spec = DiracOperatorSpec(potential=lambda x: mat)
    grid = Grid(-60.0, 60.0, 1201)
    w = eigh_banded(discretize(spec, grid))
    _, hi, _ = threshold_scan(cell)
    dispersive = w[np.abs(w) > 1e-9]
    assert np.abs(dispersive).min() >= hi - 5e-3
    # flat level of the decoupled C chain: one per grid point
    assert (np.abs(w) <= 1e-9).sum() == grid.n_points


def test_kinetic_scale_validation():
    with pytest.raises(NumericalError):
        DiracOperatorSpec(potential=lambda x: np.eye(3), kinetic_scale=0.0)
