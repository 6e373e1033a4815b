import math

import numpy as np
import pytest

from groupsde.errors import InsufficientSamples
from groupsde.torus import (
    CAT,
    STREAM_NOISE,
    DiscreteLaw,
    PointLaw,
    TorusEmpirical,
    UniformLaw,
    cat_apply,
    char_spectrum,
    check_stationarity,
    finite_cyclic_subgroups,
    grid_cloud,
    invariance_scan,
    line_noise_sampler,
    line_point,
    stationary_pipeline,
    simulate_T1,
    stationary_sampler,
    torus_distance,
    truncation_bound,
    uniform_cloud,
)

SLOPE = (1 - math.sqrt(5)) / 2
C = (3 - math.sqrt(5)) / 2
NOISE = line_noise_sampler(UniformLaw(0.0, 0.3), seed=1)
ORIGIN = line_noise_sampler(PointLaw(0.0), seed=1)


@pytest.fixture(scope="module")
def pipeline():
    return stationary_pipeline(seed=1)


def test_cat_map_constants():
    assert CAT.check()
    A = np.array(CAT.matrix)
    assert round(np.linalg.det(A)) == 1
    assert 0 < CAT.contraction < 1
    assert CAT.contraction == pytest.approx(min(np.linalg.eigvalsh(A)), abs=1e-15)
    v = np.array([1.0, SLOPE])
    assert np.allclose(A @ v, C * v, atol=1e-15)


def test_cat_apply_examples():
    assert np.array_equal(cat_apply([0.0, 0.0]), [0.0, 0.0])
    assert np.allclose(cat_apply([0.5, 0.5]), [0.0, 0.5])
    pts = grid_cloud(7).samples
    images = cat_apply(pts) * 7
    assert np.allclose(images, np.round(images), atol=1e-9)


def test_line_noise_on_line_and_contracted():
    t = NOISE.sample_params(5000)
    pts = line_point(t)
    lifted = pts[:, 1] - SLOPE * t
    assert np.all(np.abs(lifted - np.round(lifted)) < 1e-12)
    assert np.all(torus_distance(cat_apply(pts), line_point(C * t)) < 1e-12)


def test_point_noise_is_origin():
    assert np.array_equal(ORIGIN.sample(10), np.zeros((10, 2)))


def test_stationary_sampler_point_noise():
    rho = stationary_sampler(ORIGIN, 48, seed=3, sample_count=100)
    assert np.array_equal(rho.samples, np.zeros((100, 2)))


def test_single_term_truncation_is_the_noise():
    rho = stationary_sampler(NOISE, 1, seed=1, sample_count=2000, stream=STREAM_NOISE)
    assert np.array_equal(rho.samples, NOISE.sample(2000))


def test_stationary_parameter_mean():
    rho = stationary_sampler(NOISE, 48, seed=1, sample_count=100_000)
    mean = 0.15 / (1 - C)
    se = math.sqrt((0.09 / 12) / (1 - C * C) / 100_000)
    assert abs(rho.params.mean() - mean) < 3 * se
    assert mean == pytest.approx(0.2427, abs=1e-4)


def test_truncation_bound():
    assert truncation_bound(NOISE, 48) < 1e-9 * 0.3
    assert C**48 < 1e-9


def test_sampler_deterministic_and_worker_independent():
    a = stationary_sampler(NOISE, 48, seed=5, sample_count=40_000)
    b = stationary_sampler(NOISE, 48, seed=5, sample_count=40_000)
    c = stationary_sampler(NOISE, 48, seed=5, sample_count=40_000, workers=3)
    assert a.samples.tobytes() == b.samples.tobytes() == c.samples.tobytes()
    d = stationary_sampler(NOISE, 48, seed=6, sample_count=40_000)
    assert not np.array_equal(a.samples, d.samples)


def test_empirical_validation():
    with pytest.raises(ValueError):
        TorusEmpirical(2, np.array([[0.5, 1.0]]))
    with pytest.raises(ValueError):
        TorusEmpirical(3, np.zeros((1, 3)))


# ---------------------------------------------------------------- spectra


def test_spectrum_of_point_mass():
    spec = char_spectrum(TorusEmpirical(2, np.zeros((3, 2))), 4)
    assert np.allclose(spec.values, 1)


def test_spectrum_of_grid_vanishes_off_zero():
    spec = char_spectrum(grid_cloud(7), 5)
    vals = spec.values.copy()
    assert spec[(0, 0)] == pytest.approx(1)
    vals[5, 5] = 0
    assert np.abs(vals).max() < 1e-12


def test_spectrum_invariants(pipeline):
    spec = pipeline.spectrum
    v = spec.values
    assert spec[(0, 0)] == pytest.approx(1, abs=1e-15)
    assert np.allclose(v[::-1, ::-1], np.conj(v), atol=1e-12)
    assert np.abs(v).max() <= 1 + 1e-12
    assert len(spec.rows()) == 121


# ------------------------------------------------------------ stationarity


def test_point_mass_is_exactly_stationary():
    rho = TorusEmpirical(2, np.zeros((50, 2)))
    rep = check_stationarity(rho, ORIGIN, 3, 0.02)
    assert rep.max_gap == 0 and rep.passed


def test_stationary_pipeline_stationary(pipeline):
    assert pipeline.stationarity.passed
    assert pipeline.stationarity.max_gap < 0.02
    assert pipeline.stationarity.margin_ok


def test_shifted_rho_fails(pipeline):
    assert not pipeline.control.passed
    assert pipeline.control.max_gap > 0.5


def test_uniform_law_is_also_stationary():
    # Haar measure on the torus solves rho = mu * phi(rho) for any mu
    rho = uniform_cloud(100_000, seed=1)
    partner = uniform_cloud(100_000, seed=2)
    rep = check_stationarity(rho, NOISE, 5, 0.02, partner=partner)
    assert rep.passed


def test_too_few_samples():
    rho = stationary_sampler(NOISE, 48, seed=1, sample_count=100)
    rep = check_stationarity(rho, NOISE, 5, 0.02)
    assert not rep.margin_ok and rep.margin == pytest.approx(0.6)
    with pytest.raises(InsufficientSamples):
        check_stationarity(rho, NOISE, 5, 0.02, strict=True)


# -------------------------------------------------------------- invariance


def test_cyclic_subgroup_count():
    # cyclic subgroups of order q in (Z/q)^2: J_2(q) / phi(q)
    def jordan2(q):
        out = q * q
        for p in {p for p in range(2, q + 1) if q % p == 0 and all(p % d for d in range(2, p))}:
            out = out * (p * p - 1) // (p * p)
        return out

    expected = sum(jordan2(q) // sum(math.gcd(k, q) == 1 for k in range(1, q + 1)) for q in range(2, 7))
    assert expected == 31
    assert len(finite_cyclic_subgroups(6)) == 31


def test_uniform_has_no_witness():
    rep = invariance_scan(grid_cloud(12), 6, 0.05, 5)
    assert len(rep.unwitnessed) == 31
    rep = invariance_scan(uniform_cloud(100_000, seed=1), 6, 0.05, 5)
    assert len(rep.unwitnessed) == 31


def test_point_mass_witnessed_everywhere():
    rep = invariance_scan(TorusEmpirical(2, np.zeros((5, 2))), 6, 0.05, 5)
    assert rep.all_witnessed


def test_stationary_law_not_invariant(pipeline):
    assert pipeline.invariance.all_witnessed
    assert len(pipeline.invariance.entries) == 31
    assert all(e.modulus > 0.05 for e in pipeline.invariance.entries)


# ---------------------------------------------------------------- circle


def test_t1_zero_noise():
    res = simulate_T1(PointLaw(0.0), 100, seed=1, burn_in=0)
    assert np.array_equal(res.eta, np.zeros(101))


def test_t1_half_noise_traced_by_hand():
    # eta_1 = 1/2, eta_2 = 1/2 + 1/2 = 1, eta_3 = 1/2 + frac(1) = 1/2, ...
    res = simulate_T1(PointLaw(0.5), 6, seed=1, burn_in=0)
    assert res.eta.tolist() == [0.0, 0.5, 1.0, 0.5, 1.0, 0.5, 1.0]
    assert set(res.tail.tolist()) == {0.0, 0.5}


def test_t1_irrational_rotation_equidistributes():
    law = DiscreteLaw((0.0, math.sqrt(2) - 1), (0.5, 0.5))
    res = simulate_T1(law, 100_000, seed=1)
    assert res.ks < 0.02
    again = simulate_T1(law, 100_000, seed=1)
    assert again.eta.tobytes() == res.eta.tobytes()


def test_t1_requires_steps():
    with pytest.raises(ValueError):
        simulate_T1(PointLaw(0.0), 0)
