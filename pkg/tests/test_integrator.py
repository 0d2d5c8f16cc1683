import numpy as np
import pytest

from linkcsi.diagrams import BRAID, LINK, ODD, Diagram, DiagramError
from linkcsi.geometry import Configuration, bundled, trivial_link
from linkcsi.integrator import (
    UNIFORM, AnomalyTable, FormChoice, MCEstimate, NumericError, anomaly_correction,
    component_diagrams, edge_direction, integrand, integrate, self_linking_diagram,
)

CHORD = Diagram(2, ODD, BRAID, (1, 1), 0, ((1, 2),))
CHORD_BACK = Diagram(2, ODD, BRAID, (1, 1), 0, ((2, 1),))
TRIPOD = Diagram(1, ODD, LINK, (3,), 1, ((1, 4), (2, 4), (3, 4)))


def _config(*params, free=None):
    n = len(params[0])
    return Configuration([np.asarray(p, dtype=float).reshape(n, -1) for p in params],
                         np.zeros((n, 0, 3)) if free is None else np.asarray(free, dtype=float))


def test_edge_direction_examples():
    link = trivial_link(2)
    d = Diagram(2, ODD, LINK, (1, 1), 0, ((1, 2),))
    u = edge_direction(link, _config([0.0], [0.0]), d, 0)
    assert np.allclose(u, [[0, 1, 0]])
    loop = Diagram(1, ODD, LINK, (1,), 0, ((1, 1),))
    u = edge_direction(trivial_link(1), _config([0.3]), loop, 0)
    assert np.allclose(u, [[1, 0, 0]])


def test_chord_integrand_is_gauss_kernel():
    # for one chord between two strands the pulled-back area form is the
    # Gauss linking kernel, with the sign fixed by the orientation convention
    link = bundled("linked-pair")
    rng = np.random.default_rng(4)
    t1, t2 = rng.uniform(-1.2, 1.2, 10), rng.uniform(-1.2, 1.2, 10)
    got = integrand(CHORD, link, _config(t1, t2))
    a, b = link.strands
    diff = b.position(t2) - a.position(t1)
    r = np.linalg.norm(diff, axis=-1)
    kernel = np.einsum("ij,ij->i", diff, np.cross(a.velocity(t1), b.velocity(t2)))
    kernel /= 4 * np.pi * r ** 3
    assert np.allclose(got, -kernel, rtol=1e-10, atol=1e-14)


def test_bump_form_is_normalized():
    form = FormChoice("bump", cap=0.3)
    rng = np.random.default_rng(0)
    v = rng.normal(size=(400_000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    assert 4 * np.pi * form.density(v).mean() == pytest.approx(1.0, rel=0.02)
    # supported in the polar caps only
    assert np.all(form.density(np.array([[1.0, 0, 0]])) == 0)


def test_trivial_link_chord_vanishes_pointwise():
    link = trivial_link(2)
    rng = np.random.default_rng(2)
    assert np.all(integrand(CHORD, trivial_link(2, flavor=BRAID),
                            _config(rng.normal(size=50), rng.normal(size=50))) == 0)
    est = integrate(Diagram(2, ODD, LINK, (1, 1), 0, ((1, 2),)), link, samples=20_000, seed=0)
    assert est.value == 0 and est.std_error == 0


def test_tripod_on_trivial_knot_is_small():
    est = integrate(TRIPOD, trivial_link(1), samples=100_000, seed=3)
    assert abs(est.value) < 4 * est.std_error + 1e-3


def test_reversed_chord_negates():
    link = bundled("linked-pair")
    a = integrate(CHORD, link, samples=20_000, seed=9)
    b = integrate(CHORD_BACK, link, samples=20_000, seed=9)
    assert b.value == pytest.approx(-a.value, rel=1e-12)
    assert b.std_error == pytest.approx(a.std_error, rel=1e-12)


def test_degree_mismatch_is_rejected():
    with pytest.raises(DiagramError):
        integrate(CHORD, trivial_link(1), samples=10)
    loop = Diagram(1, ODD, LINK, (1,), 0, ((1, 1),))
    with pytest.raises(DiagramError):
        integrate(loop, trivial_link(1), samples=10)


def test_workers_do_not_change_the_estimate():
    link = bundled("linked-pair")
    a = integrate(CHORD, link, samples=100_000, seed=5, workers=1, chunk=10_000)
    b = integrate(CHORD, link, samples=100_000, seed=5, workers=3, chunk=10_000)
    assert a == b


def test_same_seed_same_estimate():
    a = integrate(TRIPOD, bundled("trefoil"), samples=10_000, seed=1)
    b = integrate(TRIPOD, bundled("trefoil"), samples=10_000, seed=1)
    assert a == b and isinstance(a, MCEstimate)


def test_linking_number_is_isotopy_invariant():
    ests = [integrate(CHORD, bundled(n), samples=200_000, seed=7)
            for n in ("linked-pair", "linked-pair-wide")]
    for e in ests:
        assert abs(abs(e.value) - 1) < 4 * e.std_error + 0.01
    diff = ests[0].value - ests[1].value
    assert abs(diff) < 4 * np.hypot(ests[0].std_error, ests[1].std_error)


def test_disjoint_components_integrate_as_product():
    link = trivial_link(2)
    two = Diagram(2, ODD, LINK, (2, 2), 0, ((1, 2), (3, 4)))
    parts = component_diagrams(two)
    assert len(parts) == 2
    est = integrate(two, link, samples=1000, seed=0)
    # both strands are straight, so each self-chord integrates to zero
    assert est.value == 0


def test_coincident_configuration_raises():
    link = trivial_link(1)
    d = Diagram(1, ODD, LINK, (2,), 0, ((1, 2),))
    with pytest.raises(NumericError):
        integrand(d, link, _config(np.array([[0.5, 0.5]])))


def test_anomaly_zero_mu_and_straight_strand():
    link = trivial_link(1)
    assert anomaly_correction(TRIPOD, link, AnomalyTable()).value == 0
    table = AnomalyTable()
    table.set(TRIPOD, 1.0)
    assert anomaly_correction(TRIPOD, link, table, samples=10_000).value == 0


def _gauss_self_integral(strand, reach=6.0, n=4001):
    # plain quadrature of the Gauss integrand over t1 < t2
    t = np.linspace(-reach, reach, n)
    h = t[1] - t[0]
    x, v = strand.position(t), strand.velocity(t)
    d = x[None, :, :] - x[:, None, :]
    r = np.linalg.norm(d, axis=-1)
    np.fill_diagonal(r, np.inf)
    f = np.einsum("ijk,ijk->ij", d, np.cross(v[:, None, :], v[None, :, :])) / r ** 3
    return f[np.triu_indices(n, 1)].sum() * h * h / (4 * np.pi)


def test_anomaly_matches_gauss_self_integral():
    link = bundled("trefoil")
    table = AnomalyTable()
    table.set(TRIPOD, 1.0)
    est = anomaly_correction(TRIPOD, link, table, samples=200_000, seed=1)
    oracle = -_gauss_self_integral(link.strands[0])
    assert abs(est.value - oracle) < 4 * est.std_error + 0.01
    half = AnomalyTable()
    half.set(TRIPOD, 0.5)
    assert anomaly_correction(TRIPOD, link, half, samples=200_000, seed=1).value == \
        pytest.approx(est.value / 2)


def test_self_linking_diagram_shape():
    d = self_linking_diagram(3, 1)
    assert d.ext == (0, 2, 0) and d.edges == ((1, 2),)
    assert UNIFORM.kind == "uniform"
