import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermocage import DomainError, MaterialParams, StackGeometry, build_network, pairwise_flux

P = MaterialParams()


def test_pairwise_flux():
    assert pairwise_flux(350.0, 340.0, 2.0) == 5.0
    assert pairwise_flux(340.0, 350.0, 2.0) == -5.0
    assert pairwise_flux(330.0, 330.0, 7.0) == 0.0
    with pytest.raises(DomainError):
        pairwise_flux(1.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        pairwise_flux(1.0, 0.0, -3.0)


def test_single_node():
    net = build_network(StackGeometry(1, 1, 1), P)
    np.testing.assert_array_equal(net.dense(), [[1 / P.r_sink]])
    np.testing.assert_array_equal(net.capacitance, [P.c_bank])


def test_lateral_pair():
    net = build_network(StackGeometry(2, 1, 1), P)
    d = 1 / P.r_sink + 1 / P.r_lat
    np.testing.assert_allclose(net.dense(), [[d, -1 / P.r_lat], [-1 / P.r_lat, d]], rtol=0, atol=1e-15)


def test_default_stack_sparsity(stack_net):
    assert stack_net.conductance.shape == (128, 128)
    assert stack_net.conductance.nnz == 736
    assert np.count_nonzero(stack_net.sink_conductance) == 16
    assert np.all(stack_net.sink_conductance[:16] == 1 / P.r_sink)


def test_default_is_anisotropic():
    assert P.r_vert > P.r_lat


@pytest.mark.parametrize("field", ["r_lat", "r_vert", "c_bank", "r_sink", "t_ambient"])
def test_material_validation(field):
    with pytest.raises(DomainError):
        MaterialParams(**{field: 0.0})
    with pytest.raises(DomainError):
        MaterialParams(**{field: float("nan")})


def test_sink_layer_validation():
    with pytest.raises(DomainError):
        build_network(StackGeometry(1, 1, 2), P, sink_layers=(2,))


def test_detached_sink():
    net = build_network(StackGeometry(1, 1, 3), P, sink_layers=())
    assert not net.has_sink
    np.testing.assert_allclose(net.dense().sum(axis=1), 0.0, atol=1e-15)


dims = st.integers(1, 3)


@settings(max_examples=40, deadline=None)
@given(dims, dims, dims)
def test_assembly_invariants(w, d, l):
    net = build_network(StackGeometry(w, d, l), P)
    G = net.dense()
    assert np.array_equal(G, G.T)
    np.testing.assert_allclose(G.sum(axis=1), net.sink_conductance, rtol=0, atol=1e-14)
    # independent dense eigensolver
    assert np.linalg.eigvalsh(G)[0] > 0


def test_doubling_r_lat_halves_lateral_couplings():
    geom = StackGeometry(3, 3, 2)
    a = build_network(geom, P).dense()
    b = build_network(geom, MaterialParams(r_lat=2 * P.r_lat)).dense()
    lateral = np.isclose(a, -1 / P.r_lat)
    assert lateral.any()
    np.testing.assert_allclose(b[lateral], a[lateral] / 2, rtol=1e-15)
    vertical = np.isclose(a, -1 / P.r_vert)
    np.testing.assert_array_equal(b[vertical], a[vertical])
