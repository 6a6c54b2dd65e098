import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carflow.errors import CapExceeded, DimensionMismatch, NonIsometry
from carflow.fock import (
    FockOperator,
    FockVector,
    anticommutator,
    annihilation,
    creation,
    exterior_power,
    exterior_product,
    parity_operator,
    particle_numbers,
    reversal_operator,
    second_quantization,
    vacuum,
    wedge_embed,
    wedge_operator,
)
from carflow.oracles import (
    creation_dense,
    exterior_product_dense,
    random_isometry,
    second_quantization_dense,
    wedge_basis,
)
from carflow.rng import SplitMix64

complex_vec = st.integers(1, 7).flatmap(
    lambda n: st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=n, max_size=n)
).map(lambda xs: np.array([complex(a, b) for a, b in xs]))


def unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def test_vacuum():
    v = vacuum(0)
    assert v.dim == 1 and v.amplitudes[0] == 1
    v = vacuum(3)
    assert v.dim == 8 and v.norm() == pytest.approx(1.0)


def test_creation_examples():
    out = creation(unit(1, 0)).apply(vacuum(1))
    assert out.amplitudes[0b1] == 1
    assert creation(unit(1, 0)).apply(FockVector.basis(1, [0])).norm() == 0
    out = creation(unit(2, 1)).apply(FockVector.basis(2, [0]))
    assert out.amplitudes[0b11] == -1
    assert np.allclose(out.amplitudes, wedge_basis([1, 0], 2))


def test_annihilation_examples():
    a0 = annihilation(unit(1, 0))
    assert a0.apply(vacuum(1)).norm() == 0
    assert np.allclose(a0.apply(FockVector.basis(1, [0])).amplitudes, vacuum(1).amplitudes)


def test_creation_matches_dense_oracle():
    rng = SplitMix64(7)
    for n in range(1, 6):
        f = np.array(rng.complex_vector(n))
        assert np.allclose(creation(f).toarray(), creation_dense(f), atol=1e-12)


def test_anticommutator_zero():
    z = FockOperator.zero(2)
    assert anticommutator(z, z).norm() == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
             min_size=2 * n, max_size=2 * n))))
def test_car_relations(args):
    n, coeffs = args
    f, g = np.array(coeffs[:n]), np.array(coeffs[n:])
    af, ag = annihilation(f), annihilation(g)
    ident = FockOperator.identity(n)
    scale = 1 + np.linalg.norm(f) * np.linalg.norm(g)
    assert (anticommutator(af, ag.H) - np.vdot(f, g) * ident).norm() <= 1e-10 * scale
    assert anticommutator(af, ag).norm() <= 1e-10 * scale
    assert anticommutator(af.H, ag.H).norm() <= 1e-10 * scale


@settings(max_examples=30, deadline=None)
@given(complex_vec)
def test_creation_is_linear_and_nilpotent(f):
    c = creation(f)
    assert (c @ c).norm() <= 1e-10 * (1 + np.vdot(f, f).real)
    assert (creation(2j * f) - 2j * c).norm() <= 1e-10 * (1 + np.linalg.norm(f))


def test_particle_number_conservation():
    rng = SplitMix64(3)
    n = 5
    w = random_isometry(7, n, rng)
    g = second_quantization(w).toarray()
    src, dst = particle_numbers(n), particle_numbers(7)
    rows, cols = np.nonzero(np.abs(g) > 1e-14)
    assert np.all(dst[rows] == src[cols])


def test_second_quantization_identity():
    assert (second_quantization(np.eye(4)) - FockOperator.identity(4)).norm() == 0


@pytest.mark.parametrize("shape", [(1, 1), (3, 2), (5, 5), (6, 3), (8, 5)])
def test_second_quantization_matches_oracle(shape):
    rng = SplitMix64(sum(shape))
    w = random_isometry(*shape, rng)
    diff = second_quantization(w).toarray() - second_quantization_dense(w)
    assert np.abs(diff).max() <= 1e-10


def test_second_quantization_permutation_fast_path():
    w = np.zeros((4, 3))
    w[2, 0] = w[0, 1] = w[3, 2] = 1
    assert np.allclose(exterior_power(w).toarray(), second_quantization_dense(w))


def test_second_quantization_functorial_and_isometric():
    rng = SplitMix64(11)
    w2 = random_isometry(4, 3, rng)
    w1 = random_isometry(6, 4, rng)
    g1, g2 = second_quantization(w1), second_quantization(w2)
    assert (second_quantization(w1 @ w2) - g1 @ g2).norm() <= 1e-10
    assert (g2.H @ g2 - FockOperator.identity(3)).norm() <= 1e-10
    # Γ(W) a(f)* = a(Wf)* Γ(W)
    f = np.array(rng.complex_vector(3))
    assert (g2 @ creation(f) - creation(w2 @ f) @ g2).norm() <= 1e-10


def test_second_quantization_rejects_non_isometry():
    with pytest.raises(NonIsometry, match="not an isometry"):
        second_quantization(2 * np.eye(2))


def test_cap():
    with pytest.raises(CapExceeded):
        vacuum(15)


def test_wedge_embed_example():
    e0 = FockVector.basis(1, [0])
    out = wedge_embed(e0, e0)
    assert out.n_modes == 2 and out.amplitudes[0b11] == 1


def test_wedge_embed_is_exterior_product_of_blocks():
    rng = SplitMix64(5)
    u = FockVector(np.array(rng.complex_vector(4)), 2)
    v = FockVector(np.array(rng.complex_vector(8)), 3)
    lift_u = FockVector(np.concatenate([u.amplitudes, np.zeros(28)]), 5)
    lift_v = np.zeros(32, dtype=complex)
    lift_v[np.arange(8) << 2] = v.amplitudes
    expected = exterior_product_dense(lift_u.amplitudes, lift_v, 5)
    assert np.allclose(wedge_embed(u, v).amplitudes, expected)


def test_exterior_product_associative_and_matches_oracle():
    rng = SplitMix64(9)
    n = 4
    u, v, w = (FockVector(np.array(rng.complex_vector(16)), n) for _ in range(3))
    left = exterior_product(exterior_product(u, v), w)
    right = exterior_product(u, exterior_product(v, w))
    assert (left - right).norm() <= 1e-10
    assert np.allclose(exterior_product(u, v).amplitudes,
                       exterior_product_dense(u.amplitudes, v.amplitudes, n))
    f = np.array(rng.complex_vector(n))
    one = FockVector.from_dict(n, {1 << i: f[i] for i in range(n)})
    assert (wedge_operator(one) - creation(f)).norm() <= 1e-10


def test_parity_and_reversal():
    assert parity_operator(0).toarray().tolist() == [[1]]
    p = parity_operator(2).toarray().diagonal()
    assert p[0b11] == 1 and p[0b01] == -1
    r = reversal_operator(3).toarray().diagonal().real
    assert list(r[[0, 0b1, 0b11, 0b111]]) == [1, 1, -1, -1]


def test_parity_anticommutes_with_creation():
    f = np.array([1, 2j, -1])
    p = parity_operator(3)
    assert (p @ creation(f) + creation(f) @ p).norm() <= 1e-12


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        creation(np.ones(2), 3)
    with pytest.raises(DimensionMismatch):
        FockOperator.identity(2) @ FockOperator.identity(3)
