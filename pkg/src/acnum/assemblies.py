"""Block spectral-gap assemblies and the tensor-trick reductions.

Relative-gap systems built from a certified spectral-gap pair (the
two-leg tensor padding and the 3x3 block construction with a coupling
unitary), their relative-expectation inequality audits, and the
six-unitary / four-unitary assemblies whose cross-commutators satisfy
exact averaging identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    Matrix,
    TensorLegs,
    _haar_from_rng,
    as_matrix,
    commutator,
    hs_norm,
    kron_all,
    leg_expectation,
)

F2_ETA_SCALE = 1e7


@dataclass(frozen=True)
class RelativeGapSystem:
    """Unitaries Z with a relative spectral gap towards the subalgebra
    supported on the masked legs: ||x - E(x)||_2 <= eta * sum ||[Z_i, x]||_2."""

    ambient_legs: TensorLegs
    Z: tuple
    target_leg_mask: tuple
    eta: float

    def __post_init__(self):
        zs = tuple(as_matrix(z) for z in self.Z)
        d = self.ambient_legs.total
        for z in zs:
            if z.shape[0] != d:
                raise ValueError("Z dimension does not match the ambient legs")
            if np.linalg.norm(z.conj().T @ z - np.eye(d), 2) > 1e-10:
                raise ValueError("Z member is not unitary within 1e-10")
        if len(self.target_leg_mask) != len(self.ambient_legs.legs):
            raise ValueError("target mask length must match the leg count")
        object.__setattr__(self, "Z", zs)
        object.__setattr__(self, "target_leg_mask", tuple(bool(b) for b in self.target_leg_mask))

    def target_expectation(self, x) -> Matrix:
        return leg_expectation(x, self.ambient_legs, self.target_leg_mask)

    def defect(self, x) -> tuple[float, float]:
        """(||x - E(x)||_2, sum_i ||[Z_i, x]||_2) for one sample."""
        m = as_matrix(x)
        lhs = hs_norm(m - self.target_expectation(m))
        rhs = sum(hs_norm(commutator(z, m)) for z in self.Z)
        return lhs, rhs


def build_F3_pair(k: int, n: int, pair, kappa: float) -> RelativeGapSystem:
    """Pad a certified dim-k gap pair to A (x) 1: Z1 = u (x) 1, Z2 = v (x) 1,
    with eta = sqrt(2) * kappa towards the 1 (x) B target."""
    if pair is None:
        raise ValueError("missing gap certificate pair")
    u, v = (as_matrix(p) for p in pair)
    if u.shape[0] != k or v.shape[0] != k:
        raise ValueError("gap pair dimension must be k")
    eye_n = np.eye(n)
    return RelativeGapSystem(
        ambient_legs=TensorLegs((k, n)),
        Z=(np.kron(u, eye_n), np.kron(v, eye_n)),
        target_leg_mask=(False, True),
        eta=math.sqrt(2.0) * kappa,
    )


def _block3(entries: dict, block_dim: int) -> Matrix:
    """3x3 block matrix over M_{block_dim}; entries maps (i, j) -> block."""
    out = np.zeros((3 * block_dim, 3 * block_dim), dtype=complex)
    for (i, j), blk in entries.items():
        out[i * block_dim : (i + 1) * block_dim, j * block_dim : (j + 1) * block_dim] = blk
    return out


def build_F2_blocks(k: int, n: int, w, pair, kappa: float) -> RelativeGapSystem:
    """The 3x3 block construction in M_3 (x) A (x) B.

    Z1 = blockdiag(u (x) 1, u (x) 1, v (x) 1) stays inside M_3 (x) A (x) 1;
    Z2 is the block permutation [[0,0,1],[1,0,0],[0,w,0]] with coupling
    unitary w; eta = 1e7 (1 + kappa^6) towards the 1 (x) 1 (x) B target.
    """
    if pair is None:
        raise ValueError("missing gap certificate pair")
    u, v = (as_matrix(p) for p in pair)
    if u.shape[0] != k or v.shape[0] != k:
        raise ValueError("gap pair dimension must be k")
    wm = as_matrix(w)
    kn = k * n
    if wm.shape[0] != kn:
        raise ValueError("coupling unitary must have dimension k*n")
    if np.linalg.norm(wm.conj().T @ wm - np.eye(kn), 2) > 1e-10:
        raise ValueError("coupling matrix is not unitary")
    eye_n = np.eye(n)
    eye_kn = np.eye(kn)
    z1 = _block3({(0, 0): np.kron(u, eye_n), (1, 1): np.kron(u, eye_n), (2, 2): np.kron(v, eye_n)}, kn)
    z2 = _block3({(0, 2): eye_kn, (1, 0): eye_kn, (2, 1): wm}, kn)
    return RelativeGapSystem(
        ambient_legs=TensorLegs((3, k, n)),
        Z=(z1, z2),
        target_leg_mask=(False, False, True),
        eta=F2_ETA_SCALE * (1.0 + kappa**6),
    )


def leg_support_residual(x, legs: TensorLegs, mask) -> float:
    """||x - E(x)||_2 where E projects onto the operators supported on the
    masked legs; zero certifies x lives structurally on those legs."""
    m = as_matrix(x)
    return hs_norm(m - leg_expectation(m, legs, mask))


@dataclass(frozen=True)
class RelativeGapAudit:
    samples: int
    max_violation: float
    tightest_eta: float


def relative_gap_audit(
    system: RelativeGapSystem, samples: int, seed: int, hermitian_split: bool = True
) -> RelativeGapAudit:
    """Monte-Carlo audit of the relative-gap inequality.

    Samples self-adjoint matrices directly (the inequality's core case)
    plus general ones; ``tightest_eta`` records the largest observed ratio
    ||x - E(x)||_2 / sum ||[Z_i, x]||_2 as a diagnostic, never asserted
    against the stated constant.
    """
    rng = np.random.default_rng(seed)
    d = system.ambient_legs.total
    worst = -math.inf
    tightest = 0.0
    count = 0
    for _ in range(samples):
        g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
        candidates = [g]
        if hermitian_split:
            candidates.append((g + g.conj().T) / 2.0)
        for x in candidates:
            lhs, comms = system.defect(x)
            worst = max(worst, lhs - system.eta * comms)
            if comms > 1e-12:
                tightest = max(tightest, lhs / comms)
            count += 1
    return RelativeGapAudit(samples=count, max_violation=worst, tightest_eta=tightest)


def block_diag_commutator_terms(d_blocks, x) -> tuple[float, list[float]]:
    """For block-diagonal d = diag(d_1, d_2, d_3) and x = [x_ij], return
    (||[d, x]||_2^2, [terms]) with terms_ij = the squared norm of
    d_i x_ij d_j^* - x_ij measured in the ambient normalization, so that
    ||[d, x]||_2^2 equals the sum of the terms exactly."""
    blocks = [as_matrix(b) for b in d_blocks]
    if len(blocks) != 3:
        raise ValueError("expected three diagonal blocks")
    bd = blocks[0].shape[0]
    m = as_matrix(x)
    if m.shape[0] != 3 * bd:
        raise ValueError("x must be 3x3 block with matching block size")
    d = _block3({(i, i): blocks[i] for i in range(3)}, bd)
    total = hs_norm(commutator(d, m)) ** 2
    terms = []
    dim = m.shape[0]
    for i in range(3):
        for j in range(3):
            xij = m[i * bd : (i + 1) * bd, j * bd : (j + 1) * bd]
            t = blocks[i] @ xij @ blocks[j].conj().T - xij
            terms.append(float(np.linalg.norm(t) ** 2 / dim))
    return total, terms


def _basis_unit(dim: int, i: int, j: int) -> Matrix:
    e = np.zeros((dim, dim), dtype=complex)
    e[i, j] = 1.0
    return e


def _validated_unitaries(mats, name: str):
    out = [as_matrix(m) for m in mats]
    if not out:
        raise ValueError(f"need at least one {name}")
    d = out[0].shape[0]
    for m in out:
        if m.shape[0] != d:
            raise ValueError(f"{name} entries must share a common dimension")
        if np.linalg.norm(m.conj().T @ m - np.eye(d), 2) > 1e-10:
            raise ValueError(f"{name} entry is not unitary")
    return out, d


def _default_pair(dim: int, seed: int):
    rng = np.random.default_rng(np.random.SeedSequence((seed, dim)))
    return _haar_from_rng(rng, dim), _haar_from_rng(rng, dim)


def reduction_assembly_F3(us, vs, pair_k=None, pair_m=None, seed: int = 0):
    """Six-unitary assembly in M_k (x) M_n (x) M_m.

    Z3 = sum e_ii (x) U_i (x) 1 and T3 = sum 1 (x) V_j (x) e_jj carry the
    averaging identity ||[Z3, T3]||_2^2 = (km)^{-1} sum ||[U_i, V_j]||_2^2;
    all other cross-commutators vanish by leg disjointness.  The gap pairs
    entering Z1, Z2, T1, T2 default to seeded Haar unitaries (the identities
    do not depend on them).
    """
    u_list, n = _validated_unitaries(us, "U")
    v_list, n2 = _validated_unitaries(vs, "V")
    if n != n2:
        raise ValueError("U's and V's must share a common dimension")
    k, m = len(u_list), len(v_list)
    x1, x2 = pair_k if pair_k is not None else _default_pair(k, seed)
    y1, y2 = pair_m if pair_m is not None else _default_pair(m, seed + 1)
    eye_n, eye_m, eye_k = np.eye(n), np.eye(m), np.eye(k)
    z1 = kron_all([x1, eye_n, eye_m])
    z2 = kron_all([x2, eye_n, eye_m])
    z3 = sum(kron_all([_basis_unit(k, i, i), u_list[i], eye_m]) for i in range(k))
    t1 = kron_all([eye_k, eye_n, y1])
    t2 = kron_all([eye_k, eye_n, y2])
    t3 = sum(kron_all([eye_k, v_list[j], _basis_unit(m, j, j)]) for j in range(m))
    return z1, z2, z3, t1, t2, t3


def reduction_assembly_F2(us, vs, pair_k=None, pair_m=None, seed: int = 0):
    """Four-unitary assembly in M_3 (x) M_k (x) M_n (x) M_m (x) M_3.

    Z2 and T2 are the 3x3 block constructions with coupling unitaries
    W = sum e_ii (x) U_i and W' = sum V_j (x) e_jj; the only nonvanishing
    cross-commutator is [Z2, T2], with
    ||[Z2, T2]||_2^2 = (9km)^{-1} sum ||[U_i, V_j]||_2^2.
    """
    u_list, n = _validated_unitaries(us, "U")
    v_list, n2 = _validated_unitaries(vs, "V")
    if n != n2:
        raise ValueError("U's and V's must share a common dimension")
    k, m = len(u_list), len(v_list)
    u, v = pair_k if pair_k is not None else _default_pair(k, seed)
    y, z = pair_m if pair_m is not None else _default_pair(m, seed + 1)
    eye_k, eye_n, eye_m, eye3 = np.eye(k), np.eye(n), np.eye(m), np.eye(3)
    eye_kn, eye_nm = np.eye(k * n), np.eye(n * m)

    w_coupling = sum(np.kron(_basis_unit(k, i, i), u_list[i]) for i in range(k))
    wp_coupling = sum(np.kron(v_list[j], _basis_unit(m, j, j)) for j in range(m))

    z1_blocks = _block3({(0, 0): np.kron(u, eye_n), (1, 1): np.kron(u, eye_n), (2, 2): np.kron(v, eye_n)}, k * n)
    z1 = kron_all([z1_blocks, eye_m, eye3])
    z2_blocks = _block3({(0, 2): eye_kn, (1, 0): eye_kn, (2, 1): w_coupling}, k * n)
    z2 = kron_all([z2_blocks, eye_m, eye3])

    # T's carry the 3x3 index on the last leg: sum_{a,b} block_ab (x) e_ab
    t1 = sum(
        kron_all([eye3, eye_k, eye_n, blk, _basis_unit(3, a, a)])
        for a, blk in enumerate((y, y, z))
    )
    t2 = np.zeros_like(z2)
    for (a, b), blk in {(0, 2): eye_nm, (1, 0): eye_nm, (2, 1): wp_coupling}.items():
        t2 += kron_all([eye3, eye_k, blk, _basis_unit(3, a, b)])
    return z1, z2, t1, t2


def structural_commutator(a, b) -> Matrix:
    """Commutator evaluated with a fixed naive summation order.

    When the operands act on disjoint tensor legs every entry reduces to
    the same single scalar product on both sides, so the result is exactly
    zero in floating point (BLAS-backed matmul does not guarantee this).
    """
    x, y = as_matrix(a), as_matrix(b)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    return np.einsum("ij,jk->ik", x, y, optimize=False) - np.einsum("ij,jk->ik", y, x, optimize=False)


def averaged_commutator_sq(us, vs) -> float:
    """(km)^{-1} sum_{i,j} ||[U_i, V_j]||_2^2."""
    u_list, _ = _validated_unitaries(us, "U")
    v_list, _ = _validated_unitaries(vs, "V")
    total = 0.0
    for u in u_list:
        for v in v_list:
            total += hs_norm(commutator(u, v)) ** 2
    return total / (len(u_list) * len(v_list))


def cross_commutator_norms(zs, ts) -> list[tuple[int, int, float]]:
    """Rows (alpha, beta, ||[Z_alpha, T_beta]||_2), 1-based indices.

    Uses the fixed-order product so leg-disjoint pairs report exactly 0.
    """
    rows = []
    for a, z in enumerate(zs, start=1):
        for b, t in enumerate(ts, start=1):
            rows.append((a, b, hs_norm(structural_commutator(z, t))))
    return rows
