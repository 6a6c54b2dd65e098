"""Dense brute-force references used to cross-check the sparse code paths.

Nothing here shares code with ``carflow.fock``: wedges are expanded over
index tuples and sorted with an explicit permutation sign.
"""
from itertools import product

import numpy as np


def permutation_sign(seq):
    """Sign of the permutation that sorts ``seq``; 0 on repeated entries."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def wedge_basis(modes, n):
    """Dense vector of ``e_{m1} ^ e_{m2} ^ ...`` in the increasing-order basis."""
    out = np.zeros(1 << n, dtype=complex)
    sign = permutation_sign(modes)
    if sign:
        out[sum(1 << m for m in set(modes))] = sign
    return out


def wedge_of_vectors(vectors, n):
    """``v1 ^ v2 ^ ... ^ vk`` by multilinear expansion over all index tuples."""
    out = np.zeros(1 << n, dtype=complex)
    supports = [np.flatnonzero(v) for v in vectors]
    for idx in product(*supports):
        sign = permutation_sign(idx)
        if sign:
            coeff = np.prod([v[i] for v, i in zip(vectors, idx)])
            out[sum(1 << int(m) for m in idx)] += sign * coeff
    return out


def masks_modes(mask):
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def second_quantization_dense(w):
    """``Γ_a(w)`` column by column: ``e_I -> w e_{i1} ^ ... ^ w e_{ik}``."""
    w = np.asarray(w, dtype=complex)
    m, n = w.shape
    out = np.zeros((1 << m, 1 << n), dtype=complex)
    for mask in range(1 << n):
        out[:, mask] = wedge_of_vectors([w[:, i] for i in masks_modes(mask)], m)
    return out


def creation_dense(f):
    """``a(f)*`` as the dense matrix of ``ξ -> f ^ ξ`` on basis wedges."""
    f = np.asarray(f, dtype=complex)
    n = f.shape[0]
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for mask in range(1 << n):
        modes = masks_modes(mask)
        for i in np.flatnonzero(f):
            out[:, mask] += f[i] * wedge_basis([int(i)] + modes, n)
    return out


def exterior_product_dense(u, v, n):
    """``u ^ v`` for dense vectors over ``n`` modes."""
    out = np.zeros(1 << n, dtype=complex)
    for s1 in np.flatnonzero(u):
        for s2 in np.flatnonzero(v):
            out += u[s1] * v[s2] * wedge_basis(masks_modes(int(s1)) + masks_modes(int(s2)), n)
    return out


def random_isometry(m, n, rng):
    """Random ``m x n`` isometry from a ``SplitMix64`` stream (QR of a random matrix)."""
    a = np.array(rng.complex_vector(m * n)).reshape(m, n)
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))
