"""Lattice cones, P-modules and their shift representations on finite windows.

Everything here is integer arithmetic.  A module ``A`` is an infinite subset
of ``Z^d``; only its membership test is stored.  Operators live on the finite
basis ``A ∩ W`` for an axis-aligned box ``W`` and carry a validity mask of the
columns whose image stays inside the box.
"""
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, product
from math import gcd
from typing import Optional

import numpy as np
import scipy.sparse as sps
from scipy.optimize import linprog

from carflow.errors import CapExceeded, DimensionMismatch, NotInCone, WindowError

MAX_WINDOW_POINTS = 200_000


def as_point(y):
    return tuple(int(c) for c in y)


def add(y, x, scale=1):
    return tuple(a + scale * b for a, b in zip(y, x))


def neg(y):
    return tuple(-a for a in y)


@dataclass(frozen=True)
class ConeSpec:
    """A pointed lattice cone: the monoid generated by ``generators`` in ``Z^d``."""

    generators: tuple

    def __post_init__(self):
        gens = tuple(as_point(g) for g in self.generators)
        if not gens:
            raise ValueError("a cone needs at least one generator")
        d = len(gens[0])
        if any(len(g) != d for g in gens):
            raise DimensionMismatch("cone generators have different dimensions")
        if any(not any(g) for g in gens):
            raise ValueError("zero generator")
        object.__setattr__(self, "generators", gens)
        if self._functional is None:
            raise ValueError("cone is not pointed: some x != 0 has x and -x in the cone")
        if self.lattice_index() != 1:
            raise ValueError(
                f"generators span a sublattice of index {self.lattice_index()}, not Z^{d}"
            )

    @property
    def dimension(self):
        return len(self.generators[0])

    @cached_property
    def _functional(self):
        # w with <w, g> >= 1 on every generator; exists iff the cone is pointed
        gens = np.array(self.generators, dtype=float)
        res = linprog(np.zeros(self.dimension), A_ub=-gens, b_ub=-np.ones(len(gens)),
                      bounds=[(None, None)] * self.dimension, method="highs")
        return res.x if res.status == 0 else None

    def lattice_index(self):
        """Index of the subgroup generated by the generators (0 if not full rank)."""
        d = self.dimension
        g = 0
        for rows in combinations(self.generators, d):
            g = gcd(g, int(round(np.linalg.det(np.array(rows, dtype=float)))))
        return g

    @cached_property
    def _members(self):
        return {}

    def contains(self, x):
        """Exact membership of ``x`` in the generated monoid."""
        x = as_point(x)
        if len(x) != self.dimension:
            raise DimensionMismatch(f"point {x} has wrong dimension for the cone")
        memo = self._members
        if x in memo:
            return memo[x]
        if not any(x):
            return True
        w = self._functional
        # every generator raises <w, .> by at least 1, so the search depth is bounded
        if float(np.dot(w, x)) < -1e-9:
            memo[x] = False
            return False
        found = any(self.contains(add(x, g, -1)) for g in self.generators)
        memo[x] = found
        return found

    def __contains__(self, x):
        return self.contains(x)

    def elements(self, max_terms):
        """Cone elements that are sums of at most ``max_terms`` generators, sorted."""
        out = {tuple([0] * self.dimension)}
        frontier = set(out)
        for _ in range(max_terms):
            frontier = {add(p, g) for p in frontier for g in self.generators}
            out |= frontier
        return sorted(out)


def standard_cone(d):
    """``N^d``."""
    return ConeSpec(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)))


class LatticeSet:
    """A subset of ``Z^d`` given by a membership test."""

    dimension: int

    def contains(self, y):
        raise NotImplementedError

    def __contains__(self, y):
        y = as_point(y)
        if len(y) != self.dimension:
            raise DimensionMismatch(f"point {y} has wrong dimension {len(y)} != {self.dimension}")
        return self.contains(y)

    def points(self, window):
        return [y for y in window.points() if y in self]


class ModuleSpec(LatticeSet):
    """A P-module: ``A + P ⊆ A``."""


@dataclass(frozen=True)
class HalfspaceModule(ModuleSpec):
    """``A = {y : <n_i, y> >= c_i for all i}``."""

    normals: tuple
    offsets: tuple

    def __post_init__(self):
        normals = tuple(as_point(n) for n in self.normals)
        offsets = tuple(int(c) for c in self.offsets)
        if len(normals) != len(offsets):
            raise ValueError("one offset per normal required")
        if not normals:
            raise ValueError("at least one halfspace constraint required")
        if any(len(n) != len(normals[0]) for n in normals):
            raise DimensionMismatch("normals have different dimensions")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dimension(self):
        return len(self.normals[0])

    def contains(self, y):
        return all(sum(a * b for a, b in zip(n, y)) >= c
                   for n, c in zip(self.normals, self.offsets))

    def dual_cone_violations(self, cone):
        """``(normal, generator)`` pairs with negative pairing."""
        return [(n, g) for n in self.normals for g in cone.generators
                if sum(a * b for a, b in zip(n, g)) < 0]


@dataclass(frozen=True)
class HalfspaceUnion(ModuleSpec):
    """``A = {y : <n_i, y> >= c_i for some i}``."""

    normals: tuple
    offsets: tuple

    def __post_init__(self):
        HalfspaceModule.__post_init__(self)

    @property
    def dimension(self):
        return len(self.normals[0])

    def contains(self, y):
        return any(sum(a * b for a, b in zip(n, y)) >= c
                   for n, c in zip(self.normals, self.offsets))


@dataclass(frozen=True)
class TranslateModule(ModuleSpec):
    """``A = ∪_{f ∈ F} (f + P)``."""

    cone: ConeSpec
    translates: tuple

    def __post_init__(self):
        pts = tuple(as_point(f) for f in self.translates)
        if not pts:
            raise ValueError("at least one translate required")
        if any(len(f) != self.cone.dimension for f in pts):
            raise DimensionMismatch("translate dimension differs from cone dimension")
        object.__setattr__(self, "translates", pts)

    @property
    def dimension(self):
        return self.cone.dimension

    def contains(self, y):
        return any(self.cone.contains(add(y, f, -1)) for f in self.translates)


@dataclass(frozen=True)
class ReflectedComplement(ModuleSpec):
    """``-(A^c) = {y : -y ∉ A}``."""

    base: LatticeSet

    @property
    def dimension(self):
        return self.base.dimension

    def contains(self, y):
        return not self.base.contains(neg(y))


@dataclass(frozen=True)
class Complement(LatticeSet):
    """``A^c``; a module for the reversed cone ``-P``, not for ``P``."""

    base: LatticeSet

    @property
    def dimension(self):
        return self.base.dimension

    def contains(self, y):
        return not self.base.contains(y)


def complement(a):
    return a.base if isinstance(a, Complement) else Complement(a)


def module_membership(a, y):
    return as_point(y) in a


@dataclass(frozen=True)
class Window:
    """Axis-aligned lattice box ``[lower, upper]`` (inclusive)."""

    lower: tuple
    upper: tuple
    cap: int = field(default=MAX_WINDOW_POINTS, compare=False)

    def __post_init__(self):
        lo, hi = as_point(self.lower), as_point(self.upper)
        if len(lo) != len(hi):
            raise DimensionMismatch("window corners have different dimensions")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("window corners inverted")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if self.size > self.cap:
            raise CapExceeded(f"window has {self.size} points, cap is {self.cap}")

    @classmethod
    def cube(cls, lo, hi, d):
        return cls((lo,) * d, (hi,) * d)

    @property
    def dimension(self):
        return len(self.lower)

    @property
    def size(self):
        out = 1
        for a, b in zip(self.lower, self.upper):
            out *= b - a + 1
        return out

    def points(self):
        """All lattice points, lexicographic."""
        return list(product(*(range(a, b + 1) for a, b in zip(self.lower, self.upper))))

    def __contains__(self, y):
        return all(a <= c <= b for a, c, b in zip(self.lower, y, self.upper))

    def reflected(self):
        return Window(neg(self.upper), neg(self.lower), self.cap)

    def translated(self, z):
        return Window(add(self.lower, z), add(self.upper, z), self.cap)


def validate_module(a, cone, window):
    """Points ``y ∈ A ∩ W`` and generators ``g`` with ``y + g ∉ A``.  Empty means pass."""
    return [(y, g) for y in a.points(window) for g in cone.generators
            if not a.contains(add(y, g))]


@dataclass(frozen=True, eq=False)
class WindowedIsometry:
    """Translation by ``shift`` on ``ℓ²(points)``, truncated to the basis.

    Column ``j`` maps to ``δ_{points[j] + shift}`` when that point is in the basis
    (``valid[j]``) and is zero otherwise.
    """

    shift: tuple
    points: tuple
    matrix: sps.csr_matrix
    valid: np.ndarray

    @property
    def index(self):
        return {p: i for i, p in enumerate(self.points)}

    def valid_points(self):
        return [p for p, ok in zip(self.points, self.valid) if ok]

    def toarray(self):
        return self.matrix.toarray()


def _translation(points, shift):
    points = tuple(points)
    index = {p: i for i, p in enumerate(points)}
    rows, cols = [], []
    valid = np.zeros(len(points), dtype=bool)
    for j, p in enumerate(points):
        i = index.get(add(p, shift))
        if i is not None:
            rows.append(i)
            cols.append(j)
            valid[j] = True
    n = len(points)
    mat = sps.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return WindowedIsometry(as_point(shift), points, mat, valid)


def _require_in_cone(cone, x):
    if not cone.contains(x):
        raise NotInCone(f"{as_point(x)} is not in the cone generated by {cone.generators}")


def shift_isometry(a, cone, x, window):
    """``V^A_x`` on ``ℓ²(A ∩ W)``."""
    _require_in_cone(cone, x)
    return _translation(a.points(window), as_point(x))


def kernel_basis(a, x, window):
    """``(A ∖ (A + x)) ∩ W`` in lexicographic order; indexes ``Ker(V_x*)``."""
    x = as_point(x)
    return [y for y in a.points(window) if not a.contains(add(y, x, -1))]


@dataclass
class KernelDecompositionReport:
    x: tuple
    y: tuple
    core_points: int
    missing: list
    extra: list
    overlap: list

    @property
    def passed(self):
        return not (self.missing or self.extra or self.overlap)


def kernel_decomposition_check(a, x, y, window):
    """Compare ``A∖(A+x+y)`` with ``(A∖(A+x)) ⊔ (x + A∖(A+y))`` on the core of ``W``.

    The core is the set of window points ``z`` with ``z - x`` in the window, so
    every translate ``x + p`` with ``p`` a windowed kernel point of ``y`` that
    lands in the core is accounted for.
    """
    x, y = as_point(x), as_point(y)
    core = {z for z in window.points() if add(z, x, -1) in window}
    lhs = {z for z in kernel_basis(a, add(x, y), window) if z in core}
    first = {z for z in kernel_basis(a, x, window) if z in core}
    second = {add(p, x) for p in kernel_basis(a, y, window)} & core
    rhs = first | second
    return KernelDecompositionReport(
        x=x, y=y, core_points=len(core),
        missing=sorted(lhs - rhs), extra=sorted(rhs - lhs),
        overlap=sorted(first & second),
    )


def opposite_module(a):
    """``-(A^c)``; the lattice reflection-complement, again a P-module."""
    if isinstance(a, HalfspaceModule):
        flipped = tuple(1 - c for c in a.offsets)
        if len(a.normals) == 1:
            return HalfspaceModule(a.normals, flipped)
        return HalfspaceUnion(a.normals, flipped)
    if isinstance(a, HalfspaceUnion):
        return HalfspaceModule(a.normals, tuple(1 - c for c in a.offsets))
    if isinstance(a, ReflectedComplement):
        return a.base
    return ReflectedComplement(a)


def dilation_shift(x, window):
    """Translation ``U_x`` on ``ℓ²(Z^d ∩ W)``; ``x`` may be any lattice vector."""
    return _translation(window.points(), as_point(x))


@dataclass(frozen=True, eq=False)
class OppositeRep:
    """``V^op_x = U_{-x}`` on ``ℓ²(A^c ∩ W)`` and its reflection picture.

    ``reflection`` maps ``δ_y`` in ``ℓ²(A^c ∩ W)`` to ``δ_{-y}`` in
    ``ℓ²(B ∩ (-W))`` with ``B = -(A^c)``; ``reflected`` is ``V^B_x`` there.
    """

    isometry: WindowedIsometry
    reflection: sps.csr_matrix
    module: ModuleSpec
    window: Window
    reflected: WindowedIsometry

    def intertwiner_residual(self):
        """``max |R V^op_x - V^B_x R|`` on columns valid for ``V^op_x``."""
        lhs = self.reflection @ self.isometry.matrix
        rhs = self.reflected.matrix @ self.reflection
        diff = (lhs - rhs).toarray()[:, self.isometry.valid]
        return float(np.abs(diff).max()) if diff.size else 0.0


def opposite_rep(a, cone, x, window):
    _require_in_cone(cone, x)
    comp = Complement(a).points(window)
    iso = _translation(comp, neg(as_point(x)))
    b = opposite_module(a)
    rwin = window.reflected()
    reflected = _translation(b.points(rwin), as_point(x))
    index = reflected.index
    rows = [index[neg(p)] for p in comp]
    refl = sps.csr_matrix((np.ones(len(comp)), (rows, range(len(comp)))),
                          shape=(len(reflected.points), len(comp)))
    return OppositeRep(iso, refl, b, rwin, reflected)


def box_points(box):
    return box.points()


def translation_equivalence_search(a, b, box, window) -> Optional[tuple]:
    """First ``z`` in ``box`` (lexicographic) with ``B ∩ W = (A + z) ∩ W``.

    A returned ``z`` is a verified witness on ``W``; ``None`` only means no
    witness exists inside the box for this window.
    """
    pts = window.points()
    target = [b.contains(y) for y in pts]
    for z in box.points():
        if all(a.contains(add(y, z, -1)) == t for y, t in zip(pts, target)):
            return z
    return None


@dataclass
class SymmetryResult:
    witness: Optional[tuple]

    @property
    def verdict(self):
        return "symmetric (witnessed)" if self.witness is not None else "no witness in box"


def symmetry_check(a, box, window):
    """Search ``z`` with ``A = -(A^c) + z`` on ``window``."""
    return SymmetryResult(translation_equivalence_search(opposite_module(a), a, box, window))


def kernel_dimension_profile(a, xs, window):
    return [len(kernel_basis(a, x, window)) for x in xs]
