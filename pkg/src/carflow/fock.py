"""Antisymmetric Fock space over finitely many modes.

Basis states are occupation masks: bit ``i`` of an integer is set when mode
``i`` is occupied.  A mask stands for the ordered wedge
``e_{i1} ^ e_{i2} ^ ... ^ e_{ik}`` with ``i1 < i2 < ... < ik``, so the vector
index of a basis state is the mask itself and the Fock dimension is ``2**n``.

Inner products are conjugate-linear in the first argument (``np.vdot``).
With this convention ``{a(f), a(g)*} = <f, g> I``.
"""
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sps

from carflow.errors import CapExceeded, DimensionMismatch, NonIsometry

MAX_MODES = 14


def check_mode_count(n, cap=MAX_MODES):
    if n < 0:
        raise ValueError(f"mode count must be non-negative, got {n}")
    if n > cap:
        raise CapExceeded(
            f"{n} modes exceeds the Fock cap of {cap} modes (dimension 2^{cap})"
        )


def mask_from_modes(modes):
    mask = 0
    for i in modes:
        if mask >> i & 1:
            raise ValueError(f"mode {i} listed twice")
        mask |= 1 << i
    return mask


def modes_of(mask):
    """Occupied modes of ``mask`` in increasing order."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def all_masks(n):
    return np.arange(1 << n, dtype=np.int64)


def popcount(masks):
    return np.bitwise_count(np.asarray(masks, dtype=np.int64)).astype(np.int64)


def particle_numbers(n):
    return popcount(all_masks(n))


def _bits(n):
    """``(2**n, n)`` 0/1 matrix of occupation numbers."""
    masks = all_masks(n)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class FockVector:
    """A vector in the ``2**n`` dimensional Fock space over ``n`` modes."""

    amplitudes: np.ndarray
    n_modes: int

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 1 << self.n_modes:
            raise DimensionMismatch(
                f"{amps.shape[0]} amplitudes for {self.n_modes} modes"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n, modes=()):
        amps = np.zeros(1 << n, dtype=complex)
        amps[mask_from_modes(modes)] = 1.0
        return cls(amps, n)

    @classmethod
    def from_dict(cls, n, entries):
        amps = np.zeros(1 << n, dtype=complex)
        for mask, value in entries.items():
            amps[mask] += value
        return cls(amps, n)

    @property
    def dim(self):
        return 1 << self.n_modes

    def items(self):
        """Non-zero ``(mask, amplitude)`` pairs in mask order."""
        nz = np.flatnonzero(self.amplitudes)
        return [(int(m), complex(self.amplitudes[m])) for m in nz]

    def inner(self, other):
        _same_space(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def parity(self):
        """0 or 1 for parity-homogeneous vectors, ``None`` otherwise.

        The zero vector counts as even.
        """
        nz = np.flatnonzero(self.amplitudes)
        if nz.size == 0:
            return 0
        par = popcount(nz) & 1
        if np.all(par == par[0]):
            return int(par[0])
        return None

    def parity_part(self, p):
        keep = (particle_numbers(self.n_modes) & 1) == p
        return FockVector(np.where(keep, self.amplitudes, 0), self.n_modes)

    def __add__(self, other):
        _same_space(self, other)
        return FockVector(self.amplitudes + other.amplitudes, self.n_modes)

    def __sub__(self, other):
        _same_space(self, other)
        return FockVector(self.amplitudes - other.amplitudes, self.n_modes)

    def __neg__(self):
        return FockVector(-self.amplitudes, self.n_modes)

    def __mul__(self, scalar):
        return FockVector(scalar * self.amplitudes, self.n_modes)

    __rmul__ = __mul__

    def __repr__(self):
        terms = ", ".join(f"{modes_of(m)}: {a:.4g}" for m, a in self.items()[:6])
        more = ", ..." if len(self.items()) > 6 else ""
        return f"FockVector(n_modes={self.n_modes}, {{{terms}{more}}})"


def _same_space(u, v):
    if u.n_modes != v.n_modes:
        raise DimensionMismatch(f"{u.n_modes} modes vs {v.n_modes} modes")


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Sparse operator from the Fock space over ``n_source`` modes to ``n_target`` modes."""

    matrix: sps.csr_matrix
    n_source: int
    n_target: int

    def __post_init__(self):
        mat = sps.csr_matrix(self.matrix, dtype=complex)
        if mat.shape != (1 << self.n_target, 1 << self.n_source):
            raise DimensionMismatch(
                f"matrix shape {mat.shape} does not match "
                f"{self.n_source} -> {self.n_target} modes"
            )
        mat.eliminate_zeros()
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls, n):
        return cls(sps.identity(1 << n, dtype=complex, format="csr"), n, n)

    @classmethod
    def zero(cls, n_source, n_target=None):
        n_target = n_source if n_target is None else n_target
        return cls(sps.csr_matrix((1 << n_target, 1 << n_source), dtype=complex),
                   n_source, n_target)

    @classmethod
    def diagonal(cls, values, n):
        return cls(sps.diags(np.asarray(values, dtype=complex), format="csr"), n, n)

    @property
    def shape(self):
        return self.matrix.shape

    def adjoint(self):
        return FockOperator(self.matrix.conj().T.tocsr(), self.n_target, self.n_source)

    @property
    def H(self):
        return self.adjoint()

    def toarray(self):
        return self.matrix.toarray()

    def norm(self):
        """Frobenius norm; an upper bound for the operator norm."""
        return float(np.linalg.norm(self.matrix.data))

    def apply(self, v):
        if v.n_modes != self.n_source:
            raise DimensionMismatch(
                f"operator acts on {self.n_source} modes, vector has {v.n_modes}"
            )
        return FockVector(self.matrix @ v.amplitudes, self.n_target)

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return self.apply(other)
        if other.n_target != self.n_source:
            raise DimensionMismatch(
                f"cannot compose {other.n_source}->{other.n_target} "
                f"with {self.n_source}->{self.n_target}"
            )
        return FockOperator(self.matrix @ other.matrix, other.n_source, self.n_target)

    def _check_same(self, other):
        if (self.n_source, self.n_target) != (other.n_source, other.n_target):
            raise DimensionMismatch("operators act between different Fock spaces")

    def __add__(self, other):
        self._check_same(other)
        return FockOperator(self.matrix + other.matrix, self.n_source, self.n_target)

    def __sub__(self, other):
        self._check_same(other)
        return FockOperator(self.matrix - other.matrix, self.n_source, self.n_target)

    def __neg__(self):
        return FockOperator(-self.matrix, self.n_source, self.n_target)

    def __mul__(self, scalar):
        return FockOperator(scalar * self.matrix, self.n_source, self.n_target)

    __rmul__ = __mul__

    def __repr__(self):
        return (f"FockOperator({self.n_source}->{self.n_target} modes, "
                f"nnz={self.matrix.nnz})")


def as_single_particle(f, n=None):
    f = np.asarray(f, dtype=complex).reshape(-1)
    if n is not None and f.shape[0] != n:
        raise DimensionMismatch(f"single-particle vector has {f.shape[0]} modes, expected {n}")
    return f


def vacuum(n):
    check_mode_count(n)
    return FockVector.basis(n)


def _creation_mode(i, n):
    """Sparse ``a(e_i)*`` over ``n`` modes."""
    masks = all_masks(n)
    src = masks[(masks >> i & 1) == 0]
    signs = 1 - 2 * (popcount(src & ((1 << i) - 1)) & 1)
    return sps.csr_matrix(
        (signs.astype(complex), (src | (1 << i), src)), shape=(1 << n, 1 << n)
    )


def creation(f, n=None):
    """``a(f)*``: wedge with ``f`` from the left.  Linear in ``f``."""
    f = as_single_particle(f, n)
    n = f.shape[0]
    check_mode_count(n)
    mat = sps.csr_matrix((1 << n, 1 << n), dtype=complex)
    for i in np.flatnonzero(f):
        mat = mat + f[i] * _creation_mode(int(i), n)
    return FockOperator(mat, n, n)


def annihilation(f, n=None):
    """``a(f)``, the adjoint of ``creation(f)``; antilinear in ``f``."""
    return creation(f, n).adjoint()


def anticommutator(a, b):
    return a @ b + b @ a


def parity_operator(n):
    """The grading ``(-1)^N``."""
    check_mode_count(n)
    return FockOperator.diagonal(1 - 2 * (particle_numbers(n) & 1), n)


def reversal_operator(n):
    """``(-1)^{N(N-1)/2}``: reverses the order of every wedge product."""
    check_mode_count(n)
    k = particle_numbers(n)
    return FockOperator.diagonal(1 - 2 * ((k * (k - 1) // 2) & 1), n)


def _monomial_columns(w):
    """Row index per column if ``w`` is a 0/1 partial permutation, else ``None``.

    Zero columns get row ``-1``.
    """
    if not np.all((w == 0) | (w == 1)):
        return None
    w = w.real
    if np.any(w.sum(axis=0) > 1) or np.any(w.sum(axis=1) > 1):
        return None
    rows = np.full(w.shape[1], -1, dtype=np.int64)
    r, c = np.nonzero(w)
    rows[c] = r
    return rows


def _lift_monomial(rows, m, n):
    masks = all_masks(n)
    bits = _bits(n)
    alive = np.ones(masks.shape, dtype=bool)
    target = np.zeros(masks.shape, dtype=np.int64)
    for j in range(n):
        occ = bits[:, j] == 1
        if rows[j] < 0:
            alive &= ~occ
        else:
            target[occ] |= 1 << int(rows[j])
    inversions = np.zeros(masks.shape, dtype=np.int64)
    for a, b in combinations(range(n), 2):
        if rows[a] > rows[b]:
            inversions += bits[:, a] & bits[:, b]
    signs = 1 - 2 * (inversions & 1)
    return sps.csr_matrix(
        (signs[alive].astype(complex), (target[alive], masks[alive])),
        shape=(1 << m, 1 << n),
    )


def _lift_minors(w, m, n):
    data, rows_out, cols_out = [], [], []
    for k in range(n + 1):
        for cols in combinations(range(n), k):
            src = mask_from_modes(cols)
            if k == 0:
                data.append(1.0)
                rows_out.append(0)
                cols_out.append(0)
                continue
            sub = w[:, cols]
            support = np.flatnonzero(np.any(sub != 0, axis=1))
            for rows in combinations(support.tolist(), k):
                d = np.linalg.det(sub[list(rows), :])
                if d != 0:
                    data.append(d)
                    rows_out.append(mask_from_modes(rows))
                    cols_out.append(src)
    return sps.csr_matrix((np.array(data, dtype=complex), (rows_out, cols_out)),
                          shape=(1 << m, 1 << n))


def exterior_power(w):
    """The full exterior power of ``w`` (``m x n``) as a Fock operator.

    Entry ``(J, I)`` is the minor ``det(w[J, I])`` for ``|J| = |I|`` and zero
    otherwise.  No isometry check; see ``second_quantization``.
    """
    w = np.asarray(w, dtype=complex)
    if w.ndim != 2:
        raise DimensionMismatch("expected a matrix")
    m, n = w.shape
    check_mode_count(m)
    check_mode_count(n)
    rows = _monomial_columns(w)
    if rows is not None:
        mat = _lift_monomial(rows, m, n)
    else:
        mat = _lift_minors(w, m, n)
    return FockOperator(mat, n, m)


def isometry_residual(w):
    w = np.asarray(w, dtype=complex)
    return float(np.linalg.norm(w.conj().T @ w - np.eye(w.shape[1])))


def second_quantization(w, atol=1e-10):
    """``Gamma_a(w)`` for an isometry ``w`` (``m x n``, ``m >= n``)."""
    residual = isometry_residual(w)
    if residual > atol:
        raise NonIsometry(residual)
    return exterior_power(w)


def wedge_embed(u, v):
    """``u`` on modes ``0..p-1`` wedged with ``v`` shifted to modes ``p..p+q-1``.

    Concatenated masks are already in increasing order, so no signs appear.
    """
    p, q = u.n_modes, v.n_modes
    check_mode_count(p + q)
    return FockVector(np.outer(v.amplitudes, u.amplitudes).reshape(-1), p + q)


def wedge_operator(u):
    """Left exterior multiplication ``xi -> u ^ xi`` on the same ``n`` modes."""
    n = u.n_modes
    masks = all_masks(n)
    mat = sps.csr_matrix((1 << n, 1 << n), dtype=complex)
    for s, amp in u.items():
        free = masks[(masks & s) == 0]
        swaps = np.zeros(free.shape, dtype=np.int64)
        for a in modes_of(s):
            swaps += popcount(free & ((1 << a) - 1))
        signs = (1 - 2 * (swaps & 1)) * amp
        mat = mat + sps.csr_matrix((signs, (free | s, free)), shape=(1 << n, 1 << n))
    return FockOperator(mat, n, n)


def exterior_product(u, v):
    """``u ^ v`` in the exterior algebra over a common set of modes."""
    _same_space(u, v)
    return wedge_operator(u) @ v
