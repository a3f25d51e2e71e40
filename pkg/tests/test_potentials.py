import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hosf.grid import GridSpec
from hosf.potentials import (
    PotentialSpec,
    sample_coulomb,
    sample_linear,
    sample_well,
    split_coulomb,
)


def test_coulomb_exact_value():
    # spacing 0.75: the node at 2.25 is exactly 2 from the off-node center
    g = GridSpec.cube(1, 16, 12.0)
    v = sample_coulomb(1.0, 0.0, g, center=(0.25,)).values
    x = g.coords[0]
    assert v[np.argmin(np.abs(x - 2.25))] == pytest.approx(0.5, rel=1e-15)


def test_coulomb_singular_node_rejected():
    g = GridSpec.cube(3, 8, 4.0)
    with pytest.raises(ValueError, match="epsilon"):
        sample_coulomb(1.0, 0.0, g)
    with pytest.raises(ValueError):
        sample_coulomb(1.0, -0.1, g)


def test_coulomb_monotone_along_axis():
    g = GridSpec.cube(1, 64, 32.0)
    v = sample_coulomb(1.0, 0.0, g, center=(0.25,)).values
    x = g.coords[0]
    right = v[(x > 0.25)]
    assert np.all(np.diff(right) < 0)


def test_soft_core_peak_and_default_epsilon():
    g = GridSpec.cube(2, 16, 8.0)
    v = sample_coulomb(2.0, 0.5, g).values
    assert v.max() == pytest.approx(2.0 / 0.5)
    assert np.all(np.isfinite(v))
    default = PotentialSpec(kind="coulomb", alpha=1.0).sample(g).values
    assert default.max() == pytest.approx(1.0 / g.spacing[0])


def test_soft_core_converges_in_epsilon_squared():
    g = GridSpec.cube(3, 16, 8.0)
    exact = sample_coulomb(1.0, 0.0, g, center=(0.25, 0.25, 0.25)).values
    node = (10, 8, 8)
    errs = []
    for eps in (0.08, 0.04, 0.02, 0.01):
        v = sample_coulomb(1.0, eps, g, center=(0.25, 0.25, 0.25)).values
        errs.append(abs(v[node] - exact[node]))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)


def test_minimum_image_distance():
    g = GridSpec.cube(1, 16, 10.0)
    v = sample_coulomb(1.0, 0.0, g, center=(4.75,)).values
    x = g.coords[0]
    # the node at -5 is 0.25 away through the boundary
    assert v[np.argmin(np.abs(x + 5.0))] == pytest.approx(1 / 0.25)


def test_split_reconstructs_and_bounds():
    g = GridSpec.cube(3, 16, 6.0)
    spec = PotentialSpec(kind="coulomb", alpha=1.7, epsilon=0.0, center=(0.1, 0.2, 0.15))
    v1, v2 = split_coulomb(spec, g)
    v = spec.sample(g).values
    np.testing.assert_array_equal(v1.values + v2.values, v)
    r = g.distance(spec.center)
    assert np.all(v1.values[r >= 1.0] == 0)
    assert np.max(np.abs(v2.values)) <= 1.7
    assert np.count_nonzero(v1.values) > 0


def test_split_cut_radius_parameter():
    g = GridSpec.cube(1, 64, 20.0)
    spec = PotentialSpec(kind="coulomb", alpha=1.0, epsilon=0.1, cut_radius=3.0)
    v1, _ = split_coulomb(spec, g)
    assert np.all(v1.values[g.r >= 3.0] == 0)
    with pytest.raises(ValueError):
        split_coulomb(PotentialSpec(kind="well", depth=1.0, radius=1.0), g)


def test_well_and_linear():
    g = GridSpec.cube(2, 16, 8.0)
    assert np.all(sample_well(0.0, 1.0, g).values == 0)
    w = sample_well(3.0, 2.0, g).values
    assert w[8, 8] == -3.0
    assert w[0, 0] == 0.0
    with pytest.raises(ValueError):
        sample_well(1.0, 4.0, g)
    lin = sample_linear((0.5, -1.0), g).values
    assert lin[8, 8] == 0.0
    assert lin[9, 8] == pytest.approx(0.5 * g.spacing[0])
    with pytest.raises(ValueError):
        sample_linear((1.0,), g)


def test_spec_validation():
    with pytest.raises(ValueError):
        PotentialSpec(kind="harmonic")
    with pytest.raises(ValueError):
        PotentialSpec(kind="coulomb", alpha=-1.0)
    with pytest.raises(ValueError):
        PotentialSpec(kind="well", depth=1.0, radius=0.0)
    assert np.all(PotentialSpec().sample(GridSpec.cube(1, 8, 1.0)).values == 0)


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(["well", "linear", "coulomb"]),
    dt=st.floats(min_value=1e-4, max_value=10.0),
    seed=st.integers(0, 2**31),
)
def test_potential_phase_preserves_modulus(kind, dt, seed):
    rng = np.random.default_rng(seed)
    g = GridSpec.cube(2, 16, 10.0)
    spec = {
        "well": PotentialSpec(kind="well", depth=rng.uniform(0, 5), radius=2.0),
        "linear": PotentialSpec(kind="linear", gradient=tuple(rng.normal(size=2))),
        "coulomb": PotentialSpec(kind="coulomb", alpha=rng.uniform(0, 3)),
    }[kind]
    v = spec.sample(g).values
    assert np.isrealobj(v)
    psi = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    out = np.exp(-1j * dt * v) * psi
    np.testing.assert_allclose(np.abs(out), np.abs(psi), rtol=1e-15, atol=0)
