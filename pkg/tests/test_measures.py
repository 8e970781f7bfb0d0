import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attrikit.errors import CapacityError, EmptyMeasureError, ValidationError
from attrikit.measures import (
    DataMeasure,
    Density,
    Dirac,
    HyperRectangle,
    Lebesgue,
    MeasureFamily,
    ProductMeasure,
    Scaled,
    cell_masses,
    center_of_mass,
    family_from_dict,
    increment,
    load_dataset,
    load_family,
    rect_mass,
)


def R(lo, hi):
    return HyperRectangle(np.array(lo, float), np.array(hi, float))


def test_dirac_uses_right_closed_cells():
    mu = ProductMeasure((Dirac(0.5), Lebesgue()))
    assert rect_mass(mu, R([0.25, 0], [0.5, 1])) == 1.0
    assert rect_mass(mu, R([0.5, 0], [0.75, 1])) == 0.0


def test_cell_at_zero_is_closed():
    mu = ProductMeasure((Dirac(0.0),))
    assert rect_mass(mu, R([0.0], [0.1])) == 1.0
    assert np.array_equal(cell_masses(Dirac(0.0), 4), [1, 0, 0, 0])
    assert np.array_equal(cell_masses(Dirac(0.25), 4), [1, 0, 0, 0])
    assert np.array_equal(cell_masses(Dirac(1.0), 4), [0, 0, 0, 1])


def test_lebesgue_rectangle():
    mu = ProductMeasure((Lebesgue(), Lebesgue()))
    assert rect_mass(mu, R([0.1, 0.2], [0.4, 0.7])) == pytest.approx(0.15)


def test_density_mass_and_moment():
    h = Density.from_expression("2*y")
    assert h.mass == pytest.approx(1.0, abs=1e-12)
    assert h.interval_mass(0, 0.5) == pytest.approx(0.25, abs=1e-9)
    assert h.interval_moment(0, 1) == pytest.approx(2 / 3, abs=1e-6)


def test_scaled_and_signed():
    s = Scaled(Lebesgue(), -2.0)
    assert s.mass == -2.0
    assert s.interval_mass(0.0, 0.25) == pytest.approx(-0.5)


def test_dirac_location_validated():
    with pytest.raises(ValidationError):
        Dirac(1.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_increment_equals_rect_mass(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    comps = []
    for _ in range(d):
        k = rng.integers(3)
        comps.append(Dirac(float(rng.random())) if k == 0 else Lebesgue() if k == 1 else Density.from_expression("1 + y"))
    mu = ProductMeasure(tuple(comps))
    lo, hi = np.sort(rng.random((2, d)), axis=0)
    rect = HyperRectangle(lo, hi)
    assert increment(mu.cumulative, rect) == pytest.approx(mu.rect_mass(rect), abs=1e-9)


def test_increment_literal_corner_sum():
    g = lambda Y: Y[:, 0] * Y[:, 1]
    assert increment(g, R([0.2, 0.1], [0.5, 0.4])) == pytest.approx((0.5 - 0.2) * (0.4 - 0.1))


def test_increment_capacity():
    with pytest.raises(CapacityError):
        increment(lambda Y: np.ones(len(Y)), HyperRectangle.unit(21))


def test_center_of_mass_rectangle():
    mu = ProductMeasure((Dirac(0.3), Lebesgue()))
    mass, m = center_of_mass(mu, R([0, 0], [1, 0.5]))
    assert mass == pytest.approx(0.5)
    assert np.allclose(m, [0.3, 0.25])
    mass, m = center_of_mass(mu, R([0.5, 0], [1, 1]))
    assert mass == 0.0 and np.array_equal(m, [0, 0])


DATA = np.array([[0.1, 0.2], [0.4, 0.9], [0.8, 0.5], [0.45, 0.3]])


def test_data_modes():
    joint = DataMeasure(DATA)
    assert joint.rect_mass(R([0, 0], [0.5, 1])) == pytest.approx(0.75)
    cond = DataMeasure(DATA, "conditional", j=0, value=0.42, bandwidth=0.05)
    pts, w = cond.atoms()
    assert pts.shape[0] == 2 and w.sum() == pytest.approx(1.0)
    excl = DataMeasure(DATA, "marginals-excluding", j=0, value=0.6)
    pts, _ = excl.atoms()
    assert np.all(pts[:, 0] == 0.6)
    prod = DataMeasure(DATA, "marginals-product", j=1, value=0.5)
    pts, w = prod.atoms()
    assert pts.shape == (4, 2) and w.sum() == pytest.approx(1.0)
    assert prod.rect_mass(R([0, 0.4], [0.5, 0.6])) == pytest.approx(0.75)


def test_data_errors():
    with pytest.raises(EmptyMeasureError):
        DataMeasure(DATA, "conditional", j=0, value=0.99, bandwidth=0.01)
    with pytest.raises(ValidationError):
        DataMeasure(DATA, "conditional", j=0, value=0.5)
    with pytest.raises(ValidationError):
        DataMeasure(DATA * 2)
    with pytest.raises(CapacityError):
        DataMeasure(np.random.default_rng(0).random((100, 4)), "marginals-product").atoms(max_atoms=1000)


@pytest.mark.parametrize("preset", ["pdp", "conditional", "marginal-product", "pdp-data", "local-linear",
                                    "dirac-product"])
def test_probability_presets_have_unit_mass(preset):
    fam = MeasureFamily(preset, data=DATA, bandwidth=1.0)
    for j in range(2):
        mu = fam.measure(j, np.array([0.4, 0.5]))
        assert mu.rect_mass(HyperRectangle.unit(2)) == pytest.approx(1.0)
        assert fam.is_probability


def test_global_linear_has_mass_two():
    mu = MeasureFamily("global-linear").measure(0, np.array([0.4, 0.5]))
    assert mu.mass == pytest.approx(2.0)


def test_family_validation():
    with pytest.raises(ValidationError):
        MeasureFamily("conditional")
    with pytest.raises(ValidationError):
        MeasureFamily("nope")
    with pytest.raises(ValidationError):
        MeasureFamily("pdp").measure(2, np.array([0.1, 0.2]))
    with pytest.raises(ValidationError):
        MeasureFamily("pdp").measure(0, np.array([1.1, 0.2]))


def test_measure_file_custom():
    doc = {"format": "attrikit-measure/1",
           "family": {"custom": {"feature": {"dirac": "x"}, "other": {"density": "2*y"},
                                 "coordinates": {"3": "lebesgue"}}}}
    fam = load_family(json.dumps(doc))
    mu = fam.measure(0, np.array([0.3, 0.6, 0.9]))
    assert isinstance(mu.components[0], Dirac) and mu.components[0].location == 0.3
    assert isinstance(mu.components[1], Density)
    assert isinstance(mu.components[2], Lebesgue)


def test_measure_file_preset_and_errors():
    fam = family_from_dict({"format": "attrikit-measure/1", "family": {"preset": "dirac-product",
                                                                       "baseline": [0.1, 0.2]}})
    mu = fam.measure(0, np.array([0.5, 0.5]))
    assert mu.components[1].location == 0.2
    with pytest.raises(ValidationError):
        family_from_dict({"format": "x", "family": "pdp"})
    with pytest.raises(ValidationError):
        load_family('{"format": "attrikit-measure/1", "family": {"custom": {"other": {"bogus": 1}}}}')


def test_load_dataset():
    data = load_dataset("a,b\n0.1,0.2\n0.3,0.4\n")
    assert data.shape == (2, 2)
    with pytest.raises(ValidationError):
        load_dataset("a,b\n0.1,2\n")
    with pytest.raises(ValidationError):
        load_dataset("a,b\n0.1\n")
