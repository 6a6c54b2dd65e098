"""The CAR flow ``β^V`` on a windowed Fock space.

``β_x(T) = Σ_S T_S T T_S*`` where ``S`` runs over the occupation basis of the
windowed fiber at ``x`` and ``T_S`` are the parity-twisted embeddings.  The
sum is exact on the valid corner: Fock states with no particle on a mode
``p`` whose preimage ``p - x`` lies in ``A`` but outside the window.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from carflow.fock import (
    FockOperator,
    FockVector,
    annihilation,
    check_mode_count,
    creation,
    exterior_power,
    mask_from_modes,
    MAX_MODES,
)
from carflow.errors import NotInCone, WindowError
from carflow.lattice import (
    Window,
    add,
    as_point,
    opposite_module,
    symmetry_check,
    translation_equivalence_search,
)
from carflow.product import (
    TWISTED,
    GRADED,
    ShiftSystem,
    distance,
    element,
    fiber,
    forward_product,
    left_embedding,
    phi_map,
    random_element,
    reflect_element,
    shift_matrix,
    source_projection,
)


@dataclass(frozen=True, eq=False)
class FlowContext:
    """``H = ℓ²(A ∩ W)`` with modes in lexicographic order."""

    module: object
    cone: object
    window: object
    modes: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_modes(self):
        return len(self.modes)

    @property
    def dim(self):
        return 1 << len(self.modes)

    @property
    def system(self):
        return ShiftSystem(self.module, 1)

    def index(self):
        return {p: i for i, p in enumerate(self.modes)}


def flow_context(module, cone, window, max_modes=MAX_MODES):
    modes = tuple(module.points(window))
    check_mode_count(len(modes), max_modes)
    return FlowContext(module, cone, window, modes)


def _check_shift(ctx, x):
    x = as_point(x)
    if not ctx.cone.contains(x):
        raise NotInCone(f"{x} is not in the cone")
    return x


def embeddings(ctx, x):
    """``[(S, T_S, T_S*)]`` over the occupation basis of the windowed fiber at ``x``."""
    x = _check_shift(ctx, x)
    key = ("emb", x)
    if key not in ctx._cache:
        fib = fiber(ctx.module, x, ctx.window)
        gamma = exterior_power(shift_matrix(ctx.system, x, ctx.modes))
        out = []
        for s in range(fib.dim):
            amps = np.zeros(fib.dim)
            amps[s] = 1.0
            t = left_embedding(element(fib, amps), ctx.modes, TWISTED, gamma)
            out.append((s, t, t.adjoint()))
        ctx._cache[key] = out
    return ctx._cache[key]


def _avoiding(ctx, points):
    dead = mask_from_modes(ctx.index()[p] for p in points)
    masks = np.arange(ctx.dim)
    return FockOperator.diagonal(((masks & dead) == 0).astype(float), ctx.n_modes)


def validity_projection(ctx, x):
    """Masks with no particle on ``p`` where ``p - x ∈ A`` but ``p - x ∉ W``."""
    x = _check_shift(ctx, x)
    cut = [p for p in ctx.modes
           if ctx.module.contains(add(p, x, -1)) and add(p, x, -1) not in ctx.window]
    return _avoiding(ctx, cut)


def source_validity(ctx, x):
    """Masks on modes ``p`` with ``p + x`` inside the window."""
    return source_projection(ctx.system, as_point(x), ctx.modes)


def _stacked(ctx, x):
    """``[T_1 ... T_k]`` and its adjoint, for ``Σ_S T_S op T_S*`` in one product."""
    x = _check_shift(ctx, x)
    key = ("stack", x)
    if key not in ctx._cache:
        ts = embeddings(ctx, x)
        row = sps.hstack([t.matrix for _, t, _ in ts], format="csr")
        ctx._cache[key] = (row, row.conj().T.tocsr(), len(ts))
    return ctx._cache[key]


def flow_action(ctx, x, op):
    """``(β_x(op), P_valid)``."""
    row, col, k = _stacked(ctx, x)
    blocks = sps.kron(sps.identity(k, format="csr"), op.matrix, format="csr")
    total = FockOperator((row @ blocks @ col).tocsr(), ctx.n_modes, ctx.n_modes)
    return total, validity_projection(ctx, x)


def translate_vector(ctx, x, f):
    """``V_x f`` for ``f`` over the context modes."""
    x = as_point(x)
    f = np.asarray(f, dtype=complex)
    idx = ctx.index()
    out = np.zeros(ctx.n_modes, dtype=complex)
    for j in np.flatnonzero(f):
        i = idx.get(add(ctx.modes[j], x))
        if i is None:
            raise WindowError(f"support point {ctx.modes[j]} leaves the window under +{x}")
        out[i] = f[j]
    return out


def supported_modes(ctx, x):
    """Indices of modes whose translate by ``x`` stays in the window."""
    idx = ctx.index()
    return [j for j, p in enumerate(ctx.modes) if add(p, as_point(x)) in idx]


def compressed(p, op, q=None):
    q = p if q is None else q
    return p @ op @ q


def defining_relation_check(ctx, x, f):
    """``‖P (β_x(a(f)) - a(V_x f)) P‖``."""
    lhs, p = flow_action(ctx, x, annihilation(f, ctx.n_modes))
    rhs = annihilation(translate_vector(ctx, x, f), ctx.n_modes)
    return compressed(p, lhs - rhs).norm()


def mode_generators(ctx, modes):
    """``[(label, a(δ_m)), (label, a(δ_m)*)]`` for the given mode indices."""
    out = []
    for j in modes:
        e = np.zeros(ctx.n_modes)
        e[j] = 1.0
        out.append((f"a{ctx.modes[j]}", annihilation(e)))
        out.append((f"a*{ctx.modes[j]}", creation(e)))
    return out


def semigroup_check(ctx, x, y, generators=None):
    """``max_g ‖P (β_x(β_y(g)) - β_{x+y}(g)) P‖``.

    Default generators are ``a(δ_m), a(δ_m)*`` for every mode with ``m + y``
    and ``m + x + y`` in the window.  ``P`` is the product of the three
    validity projections involved.
    """
    x, y = as_point(x), as_point(y)
    xy = add(x, y)
    if generators is None:
        ok = set(supported_modes(ctx, y)) & set(supported_modes(ctx, xy))
        generators = mode_generators(ctx, sorted(ok))
    _, px = flow_action(ctx, x, FockOperator.identity(ctx.n_modes))
    py = validity_projection(ctx, y)
    bpy, _ = flow_action(ctx, x, py)
    pxy = validity_projection(ctx, xy)
    p = px @ pxy @ bpy
    worst = 0.0
    for _, g in generators:
        inner, _ = flow_action(ctx, y, g)
        outer, _ = flow_action(ctx, x, inner)
        direct, _ = flow_action(ctx, xy, g)
        worst = max(worst, compressed(p, outer - direct).norm())
    return worst


def intertwiner_check(ctx, x, t, generators=None):
    """``[(label, ‖P (β_x(S) T - T S) Q‖)]`` per generator ``S``.

    ``Q`` is the source validity of ``V_x``; generators default to the modes
    that stay in the window under ``x``.
    """
    x = as_point(x)
    if generators is None:
        generators = mode_generators(ctx, supported_modes(ctx, x))
    q = source_validity(ctx, x)
    out = []
    for label, s in generators:
        bs, p = flow_action(ctx, x, s)
        out.append((label, (p @ (bs @ t - t @ s) @ q).norm()))
    return out


def psi_map(e, z, convention=GRADED):
    """``(x, f) -> (x, Γ_a(u) Γ_a(U_{-x}) f)`` with ``u: y -> -y + z``.

    Lands back in the product system of ``e`` when ``A = -(A^c) + z``.
    """
    op = phi_map(e, convention)
    return reflect_element(op, e.system.domain, as_point(z))


@dataclass
class SymmetryWitness:
    z: tuple
    shifts: list
    pairs: int
    residual: float
    literal_residual: float


def symmetry_witness(module, cone, z, window, rng, pairs=50, shifts=None, fiber_window=None):
    """Check ``ψ(e1·e2) = ψ(e2)·ψ(e1)`` on random elements.

    ``z`` must satisfy ``A = -(A^c) + z`` on ``window``; this is re-verified
    before anything is built.  Random elements live on the kernel points inside
    ``fiber_window`` (default ``window``).
    """
    z = as_point(z)
    found = translation_equivalence_search(opposite_module(module), module, Window(z, z), window)
    if found != z:
        raise ValueError(f"{z} is not a translation witness for A = -(A^c) + z on the window")
    if shifts is None:
        shifts = [g for g in cone.generators]
    fibers = {x: fiber(module, x, fiber_window or window) for x in shifts}
    worst = 0.0
    worst_literal = 0.0
    for _ in range(pairs):
        x = rng.choice(shifts)
        y = rng.choice(shifts)
        e1 = random_element(fibers[x], rng)
        e2 = random_element(fibers[y], rng)
        for conv in (GRADED, "literal"):
            lhs = psi_map(forward_product(e1, e2), z, conv)
            rhs = forward_product(psi_map(e2, z, conv), psi_map(e1, z, conv))
            r = distance(lhs, rhs)
            if conv == GRADED:
                worst = max(worst, r)
            else:
                worst_literal = max(worst_literal, r)
    return SymmetryWitness(z, list(shifts), pairs, worst, worst_literal)


def classify(module, box, window):
    return symmetry_check(module, box, window)
