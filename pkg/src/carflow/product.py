"""The product system of a lattice shift representation.

The fiber over ``x`` is the Fock space over ``Ker(V_x*)``, whose modes are
lattice points of ``D ∖ (D + s·x)`` where ``D`` is the underlying set and
``s = ±1`` the direction of translation (``+1`` for ``V^A`` on ``ℓ²(A)``,
``-1`` for the opposite representation on ``ℓ²(A^c)``).

A fiber does not have to hold the whole kernel: any finite set of kernel
points spans a subspace of the true fiber, and products only ever enlarge
the set of points.  Inside a fiber the modes are sorted lexicographically,
so the identification ``E(x) ⊗ E(y) -> E(x+y)`` is the exterior product
``f ⊗ g -> f ^ Γ_a(V_x) g``, written out in that sorted basis.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from carflow.errors import ParityError, WindowError
from carflow.fock import (
    FockOperator,
    FockVector,
    check_mode_count,
    exterior_power,
    mask_from_modes,
    parity_operator,
    reversal_operator,
    wedge_embed,
    wedge_operator,
)
from carflow.lattice import LatticeSet, add, as_point, complement

LITERAL = "literal"
TWISTED = "twisted"
GRADED = "graded"


@dataclass(frozen=True)
class ShiftSystem:
    """``V_x δ_p = δ_{p + direction·x}`` on ``ℓ²(domain)``."""

    domain: LatticeSet
    direction: int = 1

    def translate(self, p, x, times=1):
        return add(p, x, self.direction * times)

    def in_kernel(self, p, x):
        return self.domain.contains(p) and not self.domain.contains(self.translate(p, x, -1))

    def kernel(self, x, window):
        return [p for p in window.points() if self.in_kernel(p, x)]

    def opposite(self):
        """The system of ``V^op``: ``U_{-x}`` restricted to the complement."""
        return ShiftSystem(complement(self.domain), -self.direction)


def shift_system(a):
    return a if isinstance(a, ShiftSystem) else ShiftSystem(a, 1)


@dataclass(frozen=True)
class Fiber:
    system: ShiftSystem
    base: tuple
    points: tuple

    def __post_init__(self):
        base = as_point(self.base)
        pts = tuple(sorted(as_point(p) for p in self.points))
        if len(set(pts)) != len(pts):
            raise ValueError("fiber points must be distinct")
        bad = [p for p in pts if not self.system.in_kernel(p, base)]
        if bad:
            raise ValueError(f"points {bad[:3]} are not in the kernel at {base}")
        check_mode_count(len(pts))
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "points", pts)

    @property
    def n_modes(self):
        return len(self.points)

    @property
    def dim(self):
        return 1 << len(self.points)

    def index(self):
        return {p: i for i, p in enumerate(self.points)}

    def mask(self, pts):
        idx = self.index()
        return mask_from_modes(idx[p] for p in pts)


def fiber(a, x, window):
    """Fiber over ``x`` spanned by the kernel points inside ``window``."""
    system = shift_system(a)
    x = as_point(x)
    return Fiber(system, x, tuple(system.kernel(x, window)))


@dataclass(frozen=True, eq=False)
class PSElement:
    fiber: Fiber
    vector: FockVector

    def __post_init__(self):
        if self.vector.n_modes != self.fiber.n_modes:
            raise ValueError(
                f"vector has {self.vector.n_modes} modes, fiber has {self.fiber.n_modes}"
            )

    @property
    def base(self):
        return self.fiber.base

    @property
    def points(self):
        return self.fiber.points

    @property
    def system(self):
        return self.fiber.system

    def norm(self):
        return self.vector.norm()

    def parity(self):
        return self.vector.parity()

    def embed(self, points):
        """The same vector inside a fiber with more kernel points."""
        target = Fiber(self.system, self.base, tuple(points))
        idx = target.index()
        missing = [p for p in self.points if p not in idx]
        if missing:
            raise ValueError(f"points {missing[:3]} are not in the target fiber")
        rows = [idx[p] for p in self.points]
        w = np.zeros((target.n_modes, self.fiber.n_modes))
        w[rows, range(len(rows))] = 1.0
        return PSElement(target, exterior_power(w) @ self.vector)


def vacuum_element(f):
    return PSElement(f, FockVector.basis(f.n_modes))


def element(f, amplitudes):
    return PSElement(f, FockVector(amplitudes, f.n_modes))


def _relabel(points, images):
    """Γ_a of the point map ``points[j] -> images[j]`` into sorted ``images``."""
    target = tuple(sorted(images))
    idx = {p: i for i, p in enumerate(target)}
    w = np.zeros((len(target), len(points)))
    for j, q in enumerate(images):
        w[idx[q], j] = 1.0
    return target, exterior_power(w)


def forward_product(e1, e2, window=None):
    """``(x, f)·(y, g) = (x + y, f ⊗ Γ_a(V_x) g)``.

    Kernel modes of ``x`` come first and the translated kernel modes of ``y``
    second; the block-ordered wedge is then reordered into the sorted basis of
    the fiber over ``x + y``.  With a ``window`` the result is expressed over
    the full windowed fiber at ``x + y``.
    """
    if e1.system != e2.system:
        raise ValueError("elements belong to different product systems")
    system = e1.system
    x, y = e1.base, e2.base
    xy = add(x, y)
    # V_x keeps the lexicographic order of points, so Γ_a(V_x) is a relabeling
    moved = tuple(system.translate(p, x) for p in e2.points)
    block = e1.points + moved
    if len(set(block)) != len(block):
        raise ValueError("kernel of x meets x + kernel of y")
    joined = wedge_embed(e1.vector, e2.vector)
    if window is None:
        target, reorder = _relabel(block, block)
        return PSElement(Fiber(system, xy, target), reorder @ joined)
    full = fiber(system, xy, window)
    idx = full.index()
    outside = [p for p in block if p not in idx]
    if outside:
        raise WindowError(f"translated kernel points {outside[:3]} leave the window")
    w = np.zeros((full.n_modes, len(block)))
    w[[idx[p] for p in block], range(len(block))] = 1.0
    return PSElement(full, exterior_power(w) @ joined)


def opposite_product(e1, e2, window=None):
    """``(x, f)∘(y, g) = (x + y, g ⊗ Γ_a(V_y) f)``."""
    return forward_product(e2, e1, window)


def aligned(e1, e2):
    """Both elements re-expressed over the union of their points."""
    if e1.base != e2.base or e1.system != e2.system:
        raise ValueError("elements live over different base points")
    pts = tuple(sorted(set(e1.points) | set(e2.points)))
    return e1.embed(pts), e2.embed(pts)


def distance(e1, e2):
    a, b = aligned(e1, e2)
    return (a.vector - b.vector).norm()


def inner(e1, e2):
    a, b = aligned(e1, e2)
    return a.vector.inner(b.vector)


def ambient_embedding(e, modes):
    """Vector of ``e`` inside ``Γ_a(ℓ²(modes))``; ``modes`` sorted."""
    idx = {p: i for i, p in enumerate(modes)}
    missing = [p for p in e.points if p not in idx]
    if missing:
        raise WindowError(f"kernel points {missing[:3]} are outside the window")
    w = np.zeros((len(modes), e.fiber.n_modes))
    w[[idx[p] for p in e.points], range(e.fiber.n_modes)] = 1.0
    return exterior_power(w) @ e.vector


def shift_matrix(system, x, modes):
    """``V_x`` on ``ℓ²(modes)``; columns whose image leaves ``modes`` are zero."""
    idx = {p: i for i, p in enumerate(modes)}
    w = np.zeros((len(modes), len(modes)))
    for j, p in enumerate(modes):
        i = idx.get(system.translate(p, x))
        if i is not None:
            w[i, j] = 1.0
    return w


def source_projection(system, x, modes):
    """Projection onto masks built from modes ``p`` with ``p + x`` still in ``modes``."""
    w = shift_matrix(system, x, modes)
    dead = np.flatnonzero(w.sum(axis=0) == 0)
    dead_mask = mask_from_modes(dead.tolist())
    masks = np.arange(1 << len(modes))
    return FockOperator.diagonal(((masks & dead_mask) == 0).astype(float), len(modes))


def left_embedding(e, modes, convention=LITERAL, gamma=None):
    """``T_f η = f ⊗ Γ_a(V_x) η`` on the Fock space over ``modes``.

    ``twisted`` inserts the grading: ``η -> f ^ Γ_a(V_x) (-1)^{p(f) N} η``.
    Exact on ``source_projection(system, x, modes)``.  ``gamma`` may pass in a
    precomputed ``Γ_a(V_x)``.
    """
    n = len(modes)
    check_mode_count(n)
    f = ambient_embedding(e, modes)
    if gamma is None:
        gamma = exterior_power(shift_matrix(e.system, e.base, modes))
    op = wedge_operator(f) @ gamma
    if convention == TWISTED:
        p = e.parity()
        if p is None:
            raise ParityError("twisted embedding needs a parity-homogeneous vector")
        if p:
            op = op @ parity_operator(n)
    elif convention != LITERAL:
        raise ValueError(f"unknown convention {convention!r}")
    return op


@dataclass
class SignReport:
    parities: tuple
    residual_plus: float
    residual_minus: float
    tol: float

    @property
    def sign(self) -> Optional[int]:
        if self.residual_plus <= self.tol:
            return 1
        if self.residual_minus <= self.tol:
            return -1
        return None


def multiplicativity_check(e1, e2, modes, convention=LITERAL, tol=1e-10):
    """Which ``s ∈ {+1, -1}`` gives ``T_{e1} T_{e2} = s T_{e1·e2}`` on the valid subspace."""
    system = e1.system
    prod = forward_product(e1, e2)
    t1 = left_embedding(e1, modes, convention)
    t2 = left_embedding(e2, modes, convention)
    t12 = left_embedding(prod, modes, convention)
    q = source_projection(system, add(e1.base, e2.base), modes) @ \
        source_projection(system, e2.base, modes)
    lhs = t1 @ t2 @ q
    rhs = t12 @ q
    return SignReport(
        parities=(e1.parity(), e2.parity()),
        residual_plus=(lhs - rhs).norm(),
        residual_minus=(lhs + rhs).norm(),
        tol=tol,
    )


def phi_map(e, convention=LITERAL, window=None):
    """``(x, f) -> (x, Γ_a(U_{-x}) f)`` into the product system of ``V^op``.

    ``graded`` additionally applies ``(-1)^{N(N-1)/2}``, which turns the map
    into an exact anti-isomorphism for the fermionic product.
    """
    system = e.system
    x = e.base
    images = tuple(system.translate(p, x, -1) for p in e.points)
    if window is not None and any(q not in window for q in images):
        raise WindowError("U_{-x} moves kernel points outside the window")
    target, gamma = _relabel(e.points, images)
    vec = gamma @ e.vector
    if convention == GRADED:
        vec = reversal_operator(vec.n_modes) @ vec
    elif convention != LITERAL:
        raise ValueError(f"unknown convention {convention!r}")
    return PSElement(Fiber(system.opposite(), x, target), vec)


def phi_antihomomorphism_check(e1, e2, convention=LITERAL):
    """``‖φ(e1·e2) - φ(e2)·φ(e1)‖``."""
    lhs = phi_map(forward_product(e1, e2), convention)
    rhs = forward_product(phi_map(e2, convention), phi_map(e1, convention))
    return distance(lhs, rhs)


def reflect_element(e, target_domain, shift=None):
    """Carry ``e`` along ``p -> -p + shift`` into the system on ``target_domain``.

    Used for ``ℓ²(A^c) -> ℓ²(-(A^c))`` and ``ℓ²(A^c) -> ℓ²(A)`` (``shift = z``).
    """
    shift = shift or tuple([0] * len(e.base))
    images = tuple(add(tuple(-c for c in p), shift) for p in e.points)
    system = ShiftSystem(target_domain, -e.system.direction)
    target, gamma = _relabel(e.points, images)
    return PSElement(Fiber(system, e.base, target), gamma @ e.vector)


def random_vector(n, rng, parity=None):
    """Random complex Fock vector of unit norm from a ``SplitMix64``-style rng."""
    amps = np.array([complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(1 << n)])
    v = FockVector(amps, n)
    if parity is not None:
        v = v.parity_part(parity)
    nrm = v.norm()
    return v * (1.0 / nrm) if nrm else v


def random_element(f, rng, parity=None):
    if parity == 1 and f.n_modes == 0:
        raise ParityError("a fiber without modes has no odd vectors")
    return PSElement(f, random_vector(f.n_modes, rng, parity))
