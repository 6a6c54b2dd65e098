import numpy as np
import pytest

from carflow.errors import CapExceeded, ParityError
from carflow.fock import FockVector, exterior_power
from carflow.lattice import HalfspaceModule, TranslateModule, Window, opposite_module, standard_cone
from carflow.oracles import exterior_product_dense, second_quantization_dense
from carflow.product import (
    GRADED,
    LITERAL,
    TWISTED,
    ambient_embedding,
    distance,
    element,
    fiber,
    forward_product,
    inner,
    left_embedding,
    multiplicativity_check,
    opposite_product,
    phi_antihomomorphism_check,
    phi_map,
    random_element,
    reflect_element,
    shift_matrix,
    source_projection,
    vacuum_element,
)
from carflow.rng import SplitMix64

HALFLINE = HalfspaceModule([(1,)], [0])
HALFPLANE = HalfspaceModule([(1, 1)], [0])
QUADRANT = TranslateModule(standard_cone(2), [(0, 0)])
W1 = Window((0,), (10,))


def delta(f, *points):
    return element(f, FockVector.basis(f.n_modes, [f.index()[p] for p in points]).amplitudes)


def test_fiber_examples():
    f = fiber(HALFLINE, (2,), W1)
    assert f.points == ((0,), (1,)) and f.dim == 4
    assert fiber(HALFLINE, (0,), W1).dim == 1
    assert fiber(QUADRANT, (1, 1), Window.cube(0, 3, 2)).n_modes == 7


def test_fiber_cap():
    with pytest.raises(CapExceeded):
        fiber(QUADRANT, (3, 3), Window.cube(0, 20, 2))


def test_vacuum_products():
    e1 = vacuum_element(fiber(HALFLINE, (1,), W1))
    e2 = vacuum_element(fiber(HALFLINE, (2,), W1))
    for prod in (forward_product, opposite_product):
        out = prod(e1, e2)
        assert out.base == (3,) and out.vector.amplitudes[0] == 1 and out.norm() == 1


def test_forward_product_example():
    f = fiber(HALFLINE, (1,), W1)
    out = forward_product(delta(f, (0,)), delta(f, (0,)))
    assert out.base == (2,) and out.points == ((0,), (1,))
    assert out.vector.amplitudes[0b11] == 1 and out.norm() == pytest.approx(1)


def test_forward_product_matches_ambient_oracle():
    rng = SplitMix64(21)
    modes = tuple((k,) for k in range(9))
    for x, y in [((1,), (2,)), ((2,), (1,)), ((3,), (2,))]:
        fx, fy = fiber(HALFLINE, x, W1), fiber(HALFLINE, y, W1)
        e1, e2 = random_element(fx, rng), random_element(fy, rng)
        out = forward_product(e1, e2)
        gamma = second_quantization_dense(shift_matrix(e1.system, x, modes))
        expected = exterior_product_dense(ambient_embedding(e1, modes).amplitudes,
                                          gamma @ ambient_embedding(e2, modes).amplitudes, 9)
        assert np.allclose(ambient_embedding(out, modes).amplitudes, expected, atol=1e-12)


def test_forward_product_with_window_uses_full_fiber():
    f = fiber(HALFLINE, (1,), W1)
    out = forward_product(delta(f, (0,)), delta(f, (0,)), window=W1)
    assert out.fiber == fiber(HALFLINE, (2,), W1)


@pytest.mark.parametrize("module, gens, win", [
    (HALFLINE, [(1,), (2,)], W1),
    (HALFPLANE, [(1, 0), (0, 1)], Window.cube(-1, 1, 2)),
])
def test_products_bilinear_norm_multiplicative_associative(module, gens, win):
    rng = SplitMix64(5)
    fibs = {x: fiber(module, x, win) for x in gens}
    for _ in range(20):
        e1, e2, e3 = (random_element(fibs[rng.choice(gens)], rng) for _ in range(3))
        for prod in (forward_product, opposite_product):
            assert abs(prod(e1, e2).norm() - e1.norm() * e2.norm()) <= 1e-10
            assert distance(prod(prod(e1, e2), e3), prod(e1, prod(e2, e3))) <= 1e-10
        e2b = random_element(e2.fiber, rng)
        mixed = element(e2.fiber, (2 * e2.vector - 1j * e2b.vector).amplitudes)
        lhs = forward_product(e1, mixed)
        rhs = element(lhs.fiber, (2 * forward_product(e1, e2).vector
                                  - 1j * forward_product(e1, e2b).vector).amplitudes)
        assert distance(lhs, rhs) <= 1e-10


def test_opposite_product_is_swapped_forward():
    rng = SplitMix64(8)
    f1, f2 = fiber(HALFLINE, (1,), W1), fiber(HALFLINE, (2,), W1)
    e1, e2 = random_element(f1, rng), random_element(f2, rng)
    assert distance(opposite_product(e1, e2), forward_product(e2, e1)) == 0


def test_left_embedding_vacuum_is_second_quantized_shift():
    modes = tuple((k,) for k in range(6))
    e = vacuum_element(fiber(HALFLINE, (2,), W1))
    gamma = exterior_power(shift_matrix(e.system, (2,), modes))
    for conv in (LITERAL, TWISTED):
        assert (left_embedding(e, modes, conv) - gamma).norm() == 0


def test_left_embedding_fiber_isometry():
    rng = SplitMix64(13)
    modes = tuple((k,) for k in range(7))
    f = fiber(HALFLINE, (2,), W1)
    q = source_projection(f.system, (2,), modes)
    for conv in (LITERAL, TWISTED):
        for p in (0, 1):
            e1, e2 = random_element(f, rng, p), random_element(f, rng, p)
            t1, t2 = left_embedding(e1, modes, conv), left_embedding(e2, modes, conv)
            assert (t2.H @ t1 - inner(e2, e1) * q).norm() <= 1e-10
            assert (t1.H @ t1 - q).norm() <= 1e-10


def test_twisted_rejects_mixed_parity():
    f = fiber(HALFLINE, (2,), W1)
    e = element(f, np.ones(4) / 2)
    with pytest.raises(ParityError):
        left_embedding(e, tuple((k,) for k in range(5)), TWISTED)


def sign_table(module, x, win, modes, conv):
    rng = SplitMix64(1)
    f0 = fiber(module, x, win)
    table = {}
    for p1 in (0, 1):
        for p2 in (0, 1):
            signs = {multiplicativity_check(random_element(f0, rng, p1),
                                            random_element(f0, rng, p2), modes, conv).sign
                     for _ in range(3)}
            table[p1, p2] = signs.pop() if len(signs) == 1 else None
    return table


def test_multiplicativity_vacuum():
    f = fiber(HALFLINE, (1,), W1)
    rep = multiplicativity_check(vacuum_element(f), vacuum_element(f), tuple((k,) for k in range(4)))
    assert rep.sign == 1 and rep.residual_plus == 0


def test_multiplicativity_sign_tables_are_stable():
    modes1 = tuple((k,) for k in range(6))
    modes2 = tuple(p for p in Window.cube(-1, 2, 2).points() if sum(p) >= 0)
    literal = sign_table(HALFLINE, (1,), W1, modes1, LITERAL)
    assert literal == {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 1}
    twisted = sign_table(HALFLINE, (1,), W1, modes1, TWISTED)
    assert twisted == {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): -1}
    assert sign_table(HALFLINE, (2,), W1, tuple((k,) for k in range(7)), LITERAL) == literal
    win = Window.cube(-1, 2, 2)
    assert sign_table(HALFPLANE, (1, 0), win, modes2, LITERAL) == literal
    assert sign_table(HALFPLANE, (1, 0), win, modes2, TWISTED) == twisted


def test_phi_examples():
    f = fiber(HALFLINE, (3,), W1)
    assert phi_map(vacuum_element(f)).vector.amplitudes[0] == 1
    out = phi_map(delta(f, (0,), (1,)))
    assert out.points == ((-3,), (-2,), (-1,))
    assert out.vector.amplitudes[0b011] == 1 and out.norm() == 1
    assert all(not HALFLINE.contains(p) for p in out.points)


def test_phi_unitary():
    rng = SplitMix64(4)
    f = fiber(HALFPLANE, (1, 0), Window.cube(-2, 2, 2))
    for _ in range(20):
        e = random_element(f, rng)
        for conv in (LITERAL, GRADED):
            assert abs(phi_map(e, conv).norm() - e.norm()) <= 1e-12


def test_phi_literal_sign_and_graded_antihomomorphism():
    f = fiber(HALFLINE, (1,), W1)
    e1 = e2 = delta(f, (0,))
    lhs = phi_map(forward_product(e1, e2))
    rhs = forward_product(phi_map(e2), phi_map(e1))
    # single-particle pair: the literal map is anti-multiplicative up to -1
    assert distance(lhs, element(rhs.fiber, (-rhs.vector).amplitudes)) <= 1e-12
    assert phi_antihomomorphism_check(e1, e2, GRADED) <= 1e-10
    assert phi_antihomomorphism_check(vacuum_element(f), vacuum_element(f), LITERAL) == 0


def test_phi_graded_random_pairs_halfplane():
    rng = SplitMix64(17)
    gens = [(1, 0), (0, 1)]
    fibs = {x: fiber(HALFPLANE, x, Window.cube(-1, 1, 2)) for x in gens}
    worst = max(phi_antihomomorphism_check(random_element(fibs[rng.choice(gens)], rng),
                                           random_element(fibs[rng.choice(gens)], rng), GRADED)
                for _ in range(50))
    assert worst <= 1e-10


def test_phi_then_reflection_is_multiplicative():
    rng = SplitMix64(2)
    b = opposite_module(HALFPLANE)
    fibs = [fiber(HALFPLANE, x, Window.cube(-1, 1, 2)) for x in [(1, 0), (0, 1)]]

    def chi(e):
        return reflect_element(phi_map(e, GRADED), b)

    for _ in range(10):
        e1, e2 = random_element(fibs[0], rng), random_element(fibs[1], rng)
        out = chi(forward_product(e1, e2))
        assert all(b.contains(p) for p in out.points)
        assert distance(out, forward_product(chi(e2), chi(e1))) <= 1e-10
