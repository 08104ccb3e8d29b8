"""Finite-dimensional self-adjoint subalgebras of matrix algebras.

Generation by span closure, block (factor/multiplicity) structure,
commutants, trace-preserving conditional expectations, epsilon-containment
estimates, and the basic construction of an inclusion realized on the
Hilbert-Schmidt space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import Matrix, as_matrix, commutator, hs_inner, hs_norm, op_norm

RANK_TOL = 1e-10


def _vec(m: Matrix) -> np.ndarray:
    return m.reshape(-1)


def _unvec(v: np.ndarray, d: int) -> Matrix:
    return v.reshape(d, d)


def _orthonormal_rows(rows: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as rows) of the row space, dropping singular
    directions below ``rank_tol`` relative to the largest."""
    if rows.size == 0:
        return rows.reshape(0, rows.shape[-1])
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return rows[:0]
    return vh[s > rank_tol * s[0]]


def _nullspace_rows(mat: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as rows) of the right nullspace."""
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    n = vh.shape[0]
    if s.size == 0 or s[0] == 0.0:
        return vh
    keep = np.zeros(n, dtype=bool)
    keep[: s.size] = s <= rank_tol * s[0]
    keep[s.size :] = True
    return vh[keep]


@dataclass
class SubalgebraBasis:
    """HS-orthonormal basis of a self-adjoint subalgebra.

    ``basis`` is stacked as shape (k, d, d); treat instances as
    immutable after construction.
    """

    ambient_dim: int
    basis: np.ndarray
    contains_unit: bool = True

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.complex128)
        if b.ndim != 3 or b.shape[1] != b.shape[2] or b.shape[1] != self.ambient_dim:
            raise ValueError(f"basis must have shape (k, {self.ambient_dim}, {self.ambient_dim})")
        self.basis = b
        # rows orthonormal in the standard inner product iff the matrices
        # are HS-orthonormal (vec(b)/sqrt(d) has unit length)
        self._vecs = b.reshape(b.shape[0], -1) / math.sqrt(self.ambient_dim)

    @property
    def size(self) -> int:
        return int(self.basis.shape[0])

    def span_project(self, x) -> Matrix:
        m = as_matrix(x)
        if m.shape[0] != self.ambient_dim:
            raise ValueError(f"dimension mismatch: {m.shape[0]} vs ambient {self.ambient_dim}")
        coeffs = self._vecs.conj() @ _vec(m)
        return _unvec(coeffs @ self._vecs, self.ambient_dim)

    def span_residual(self, x) -> float:
        m = as_matrix(x)
        return hs_norm(m - self.span_project(m))

    def validate(self, ortho_tol: float = 1e-10, closure_tol: float = 1e-9) -> None:
        """Check HS-orthonormality and closure under product and adjoint."""
        g = self._vecs @ self._vecs.conj().T
        if np.abs(g - np.eye(self.size)).max() > ortho_tol:
            raise ValueError("basis is not HS-orthonormal")
        for i in range(self.size):
            if self.span_residual(self.basis[i].conj().T) > closure_tol:
                raise ValueError("basis span is not adjoint-closed")
            for j in range(self.size):
                if self.span_residual(self.basis[i] @ self.basis[j]) > closure_tol:
                    raise ValueError("basis span is not product-closed")

    def unit_residual(self) -> float:
        return self.span_residual(np.eye(self.ambient_dim))


def generate_subalgebra(gens, rank_tol: float = RANK_TOL, max_rounds: int | None = None) -> SubalgebraBasis:
    """Smallest unital self-adjoint algebra containing ``gens``.

    Iterates span closure under left multiplication by the generators and
    their adjoints until the rank stabilizes; singular values below
    ``rank_tol`` times the largest are treated as zero.
    """
    mats = [as_matrix(g) for g in gens]
    if not mats:
        raise ValueError("need at least one generator")
    d = mats[0].shape[0]
    for m in mats:
        if m.shape[0] != d:
            raise ValueError("generators must share a common dimension")
    mults = mats + [m.conj().T for m in mats]
    seed_rows = np.stack([_vec(np.eye(d, dtype=complex))] + [_vec(m) for m in mults])
    rows = _orthonormal_rows(seed_rows, rank_tol)
    if max_rounds is None:
        max_rounds = d * d + 2
    for _ in range(max_rounds):
        current = rows.reshape(-1, d, d)
        new_rows = [rows]
        for g in mults:
            new_rows.append(np.einsum("ij,ajk->aik", g, current).reshape(-1, d * d))
        grown = _orthonormal_rows(np.concatenate(new_rows), rank_tol)
        if grown.shape[0] == rows.shape[0]:
            rows = grown
            break
        rows = grown
    else:
        raise RuntimeError("span closure did not stabilize")
    basis = rows.reshape(-1, d, d) * math.sqrt(d)
    return SubalgebraBasis(ambient_dim=d, basis=basis, contains_unit=True)


def _commutator_map_rows(mats, d: int, corner: Matrix | None = None) -> np.ndarray:
    """Stack the linear maps y -> [y, x] (x over mats and adjoints), plus
    y -> y - q y q when a corner projection is given; acts on row-major vec."""
    eye = np.eye(d)
    blocks = []
    seen = list(mats) + [m.conj().T for m in mats]
    for x in seen:
        blocks.append(np.kron(x, eye) - np.kron(eye, x.T))
    if corner is not None:
        blocks.append(np.eye(d * d) - np.kron(corner, corner.T))
    return np.concatenate(blocks)


def commutant_basis(mats, corner: Matrix | None = None, rank_tol: float = RANK_TOL) -> SubalgebraBasis:
    """Orthonormal basis of {y : xy = yx for all x in the set and its adjoints}.

    With ``corner`` q, computes the relative commutant inside qMq instead
    (adds the constraint y = qyq).  Computed as the nullspace of the
    stacked commutator maps.
    """
    ms = [as_matrix(m) for m in mats]
    if not ms:
        raise ValueError("need at least one matrix")
    d = ms[0].shape[0]
    for m in ms:
        if m.shape[0] != d:
            raise ValueError("matrices must share a common dimension")
    q = as_matrix(corner) if corner is not None else None
    rows = _nullspace_rows(_commutator_map_rows(ms, d, q), rank_tol)
    basis = rows.reshape(-1, d, d) * math.sqrt(d)
    alg = SubalgebraBasis(ambient_dim=d, basis=basis, contains_unit=False)
    alg.contains_unit = alg.unit_residual() <= 1e-9
    return alg


def cond_expect(x, q: SubalgebraBasis) -> Matrix:
    """Trace-preserving conditional expectation onto span(q): the unique
    map with tau(E(x) y) = tau(x y) for all y in the algebra, i.e. the
    HS-orthogonal projection."""
    return q.span_project(x)


@dataclass
class Block:
    central_projection: Matrix
    factor_dim: int
    multiplicity: int
    matrix_units: np.ndarray  # shape (n, n, d, d); [i, j] = f_ij


@dataclass
class BlockStructure:
    blocks: list[Block] = field(default_factory=list)

    @property
    def total_factor_sq(self) -> int:
        return sum(b.factor_dim**2 for b in self.blocks)


def _center_basis(p: SubalgebraBasis, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal coefficient vectors spanning the center of span(p)."""
    k = p.size
    cols = []
    for j in range(k):
        block = np.stack([_vec(commutator(p.basis[i], p.basis[j])) for i in range(k)], axis=1)
        cols.append(block)
    stacked = np.concatenate(cols)
    return _nullspace_rows(stacked, rank_tol)


def _cluster_eigenvalues(w: np.ndarray, gap_tol: float) -> list[np.ndarray]:
    order = np.argsort(w)
    groups: list[list[int]] = [[order[0]]]
    for idx in order[1:]:
        if w[idx] - w[groups[-1][-1]] > gap_tol:
            groups.append([idx])
        else:
            groups[-1].append(idx)
    return [np.array(g) for g in groups]


def _random_hermitian_in_span(rng, vectors: np.ndarray, basis: np.ndarray) -> Matrix:
    coeffs = rng.standard_normal(vectors.shape[0]) + 1j * rng.standard_normal(vectors.shape[0])
    y = np.einsum("i,ijk->jk", coeffs @ vectors, basis)
    return (y + y.conj().T) / 2.0


def _minimal_projections(sub_basis: np.ndarray, unit: Matrix, n_parts: int, part_rank: int, rng, span_tol=1e-8):
    """Split a factor block into ``n_parts`` minimal projections via the
    spectrum of a generic Hermitian element; returns None on a degenerate draw."""
    d = unit.shape[0]
    k = sub_basis.shape[0]
    coeffs = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    y = np.einsum("i,ijk->jk", coeffs, sub_basis)
    h = (y + y.conj().T) / 2.0
    wz, vz = np.linalg.eigh(unit)
    support = vz[:, wz > 0.5]
    hs_sub = support.conj().T @ h @ support
    w, v = np.linalg.eigh((hs_sub + hs_sub.conj().T) / 2.0)
    spread = max(w[-1] - w[0], 1.0)
    groups = _cluster_eigenvalues(w, 1e-6 * spread)
    if len(groups) != n_parts or any(len(g) != part_rank for g in groups):
        return None
    projs = []
    for g in groups:
        cols = support @ v[:, g]
        projs.append(cols @ cols.conj().T)
    return projs


def block_structure(p: SubalgebraBasis, seed: int = 0, max_retries: int = 8) -> BlockStructure:
    """Minimal central projections with per-block matrix-unit systems.

    The center is found by a linear solve; the splitting into blocks uses
    the spectral decomposition of a random Hermitian central element,
    reseeding on degenerate draws (at most ``max_retries`` times).
    """
    d = p.ambient_dim
    center_coeffs = _center_basis(p)
    m = center_coeffs.shape[0]
    if m == 0:
        raise RuntimeError("empty center; basis is not an algebra")
    last_error = "degenerate random central element"
    for attempt in range(max_retries):
        rng = np.random.default_rng(np.random.SeedSequence((seed, attempt)))
        h = _random_hermitian_in_span(rng, center_coeffs, p.basis)
        w, v = np.linalg.eigh(h)
        spread = max(w[-1] - w[0], 1.0)
        groups = _cluster_eigenvalues(w, 1e-6 * spread)
        # drop the ambient kernel of a non-unital algebra: eigenvectors of
        # eigenvalue ~0 outside the support belong to no block
        unit_defect = p.unit_residual()
        projs = []
        ok = True
        for g in groups:
            cols = v[:, g]
            z = cols @ cols.conj().T
            if unit_defect > 1e-9 and abs(w[g]).max() < 1e-9:
                continue  # kernel of the (corner) algebra unit
            if p.span_residual(z) > 1e-8:
                ok = False
                break
            projs.append(z)
        if not ok or len(projs) != m:
            last_error = f"clustering found {len(projs)} central projections, expected {m}"
            continue
        blocks = []
        for z in projs:
            bz_rows = _orthonormal_rows(np.einsum("aij,jk->aik", p.basis, z).reshape(p.size, -1))
            r = bz_rows.shape[0]
            n = int(round(math.sqrt(r)))
            if n * n != r:
                ok = False
                last_error = f"block span rank {r} is not a perfect square"
                break
            mult = int(round(float(np.trace(z).real))) // n
            if n * mult != int(round(float(np.trace(z).real))):
                ok = False
                last_error = "block rank not divisible by factor dimension"
                break
            sub_basis = bz_rows.reshape(r, d, d) * math.sqrt(d)
            units = _build_matrix_units(sub_basis, z, n, mult, rng)
            if units is None:
                ok = False
                last_error = "matrix-unit construction degenerate"
                break
            blocks.append(Block(z, n, mult, units))
        if ok:
            return BlockStructure(blocks=blocks)
    raise RuntimeError(f"block_structure failed after {max_retries} retries: {last_error}")


def _build_matrix_units(sub_basis: np.ndarray, z: Matrix, n: int, mult: int, rng):
    d = z.shape[0]
    if n == 1:
        units = np.zeros((1, 1, d, d), dtype=complex)
        units[0, 0] = z
        return units
    for _ in range(8):
        projs = _minimal_projections(sub_basis, z, n, mult, rng)
        if projs is not None:
            break
    else:
        return None
    units = np.zeros((n, n, d, d), dtype=complex)
    f1 = [None] * n
    f1[0] = projs[0]
    for j in range(1, n):
        best, best_norm = None, 0.0
        for b in sub_basis:
            cand = projs[0] @ b @ projs[j]
            cn = float(np.linalg.norm(cand))
            if cn > best_norm:
                best, best_norm = cand, cn
        if best is None or best_norm < 1e-9:
            return None
        c = float(np.trace(best.conj().T @ best).real) / mult
        f1[j] = best / math.sqrt(c)
    for i in range(n):
        for j in range(n):
            units[i, j] = f1[i].conj().T @ f1[j]
    # sanity: f_ij^* f_ij = e_j within tolerance
    for j in range(n):
        if np.linalg.norm(units[0, j].conj().T @ units[0, j] - projs[j]) > 1e-7 * max(1.0, mult):
            return None
    return units


def containment_defect(p: SubalgebraBasis, q: SubalgebraBasis, testset, norm_slack: float = 1e-8) -> float:
    """max over the testset of ||x - E_Q(x)||_2.

    This is a lower estimate of the true supremum over the unit ball of P.
    Elements with operator norm above 1 + ``norm_slack`` are rejected;
    elements outside span(P) trigger a warning.
    """
    worst = 0.0
    for x in testset:
        m = as_matrix(x)
        if op_norm(m, tol=1e-10) > 1.0 + norm_slack:
            raise ValueError("testset element has operator norm above the unit ball slack")
        if p.span_residual(m) > 1e-8:
            warnings.warn("testset element is not in the span of P", stacklevel=2)
        worst = max(worst, hs_norm(m - cond_expect(m, q)))
    return worst


def subalg_distance(p: SubalgebraBasis, q: SubalgebraBasis, testset_p, testset_q) -> float:
    """max of the two containment defects (one-sided estimate of d(P, Q))."""
    return max(containment_defect(p, q, testset_p), containment_defect(q, p, testset_q))


def default_testset(p: SubalgebraBasis, gens=None, count: int = 64, seed: int = 0) -> list[Matrix]:
    """Generating unitaries (when given) plus random unit-ball elements of span(P)."""
    rng = np.random.default_rng(seed)
    out = [as_matrix(g) for g in (gens or [])]
    for _ in range(count):
        coeffs = rng.standard_normal(p.size) + 1j * rng.standard_normal(p.size)
        y = np.einsum("i,ijk->jk", coeffs, p.basis)
        nrm = float(np.linalg.norm(y, 2))
        if nrm > 0:
            out.append(y / nrm)
    return out


@dataclass
class BasicConstruction:
    """e_Q realized on the HS space (row-major vec), with the canonical
    trace Tr normalized so that Tr(x e_Q y) = tau(xy)."""

    dim: int
    e_q: np.ndarray
    _weight: np.ndarray  # right multiplication by S^{-1}, S = sum b b^*

    def left_mult(self, x) -> np.ndarray:
        m = as_matrix(x)
        return np.kron(m, np.eye(self.dim))

    def trace(self, t) -> complex:
        return complex(np.trace(np.asarray(t) @ self._weight))

    def hs_norm_tr(self, t) -> float:
        t = np.asarray(t)
        val = self.trace(t.conj().T @ t)
        return math.sqrt(max(val.real, 0.0))


def basic_construction(q: SubalgebraBasis, cap: int = 32) -> BasicConstruction:
    """Basic construction of Q inside its ambient matrix algebra.

    Returns e_Q as a d^2 x d^2 projection acting on vectorized matrices and
    the canonical trace evaluator.  The trace is implemented exactly as
    Tr(T) = trace(T R) with R = right multiplication by S^{-1},
    S = sum_b b b^* over an HS-orthonormal basis of Q (S is central in Q
    and the formula reproduces Tr(x e_Q y) = tau(xy)).
    """
    d = q.ambient_dim
    if d > cap:
        raise ValueError(f"ambient dimension {d} exceeds the basic-construction cap {cap}")
    if not q.contains_unit:
        raise ValueError("basic construction requires a unital subalgebra")
    v = q._vecs
    e_q = v.T @ v.conj()
    s = np.einsum("aij,akj->ik", q.basis, q.basis.conj())
    s_inv = np.linalg.inv(s)
    weight = np.kron(np.eye(d), s_inv.T)
    return BasicConstruction(dim=d, e_q=e_q, _weight=weight)


def group_average_projection(group, bc: BasicConstruction, group_tol: float = 1e-9) -> np.ndarray:
    """f = |G|^{-1} sum_U (L_U e_Q L_U^*) for a finite unitary group G.

    Verifies closure of G under products and inverses within ``group_tol``
    (in the normalized HS metric) before averaging.
    """
    mats = [as_matrix(g) for g in group]
    if not mats:
        raise ValueError("empty group")
    d = mats[0].shape[0]
    if d != bc.dim:
        raise ValueError("group dimension does not match the basic construction")

    def member(x):
        return any(hs_norm(x - g) <= group_tol for g in mats)

    for g in mats:
        if not member(g.conj().T):
            raise ValueError("set is not closed under inverses: not a group")
        for h in mats:
            if not member(g @ h):
                raise ValueError("set is not closed under products: not a group")
    f = np.zeros_like(bc.e_q)
    for g in mats:
        lg = np.kron(g, np.eye(d))
        f += lg @ bc.e_q @ lg.conj().T
    return f / len(mats)


def lemma_close_unitary(u, p: SubalgebraBasis, seed: int = 0) -> Matrix:
    """Nearest-unitary replacement inside P: a unitary v in span(P) with
    ||u - v||_2 <= 3 ||u - E_P(u)||_2, obtained by block-wise polar
    decomposition of E_P(u) in P's factor blocks."""
    from .linalg import polar_unitary

    if not p.contains_unit:
        raise ValueError("P must contain the ambient unit")
    m = as_matrix(u)
    y = cond_expect(m, p)
    bs = block_structure(p, seed=seed)
    d = p.ambient_dim
    v = np.zeros((d, d), dtype=complex)
    for blk in bs.blocks:
        n, mult = blk.factor_dim, blk.multiplicity
        c = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                c[i, j] = np.trace(blk.matrix_units[j, i] @ y) / mult
        w = polar_unitary(c)
        v += np.einsum("ij,ijkl->kl", w, blk.matrix_units)
    return v


@dataclass
class CommutantLemmaReport:
    hypothesis_ok: bool
    eps: float
    projection_gap: float
    containment_defect_pq: float
    corner_defect: float
    bound: float
    passed: bool | None


def commutant_lemma_check(
    p: SubalgebraBasis,
    proj_p,
    q: SubalgebraBasis,
    proj_q,
    eps: float,
    testset=None,
    seed: int = 0,
) -> CommutantLemmaReport:
    """Measure the corner-commutant containment Q' cap qMq inside
    P' cap pMp and compare against the 4*eps bound.

    The hypotheses (P inside the corner of p, Q inside the corner of q,
    ||p - q||_2 <= eps, P eps-contained in Q) are measured first; when they
    fail, the defect is still reported but the bound is not asserted.
    """
    pp, qq = as_matrix(proj_p), as_matrix(proj_q)
    projection_gap = hs_norm(pp - qq)
    corner_ok = all(hs_norm(pp @ b @ pp - b) <= 1e-8 for b in p.basis) and all(
        hs_norm(qq @ b @ qq - b) <= 1e-8 for b in q.basis
    )
    defect_pq = containment_defect(p, q, default_testset(p, seed=seed))
    hypothesis_ok = corner_ok and projection_gap <= eps + 1e-12 and defect_pq <= eps + 1e-12

    q_rel = commutant_basis(list(q.basis), corner=qq)
    p_rel = commutant_basis(list(p.basis), corner=pp)
    ts = testset if testset is not None else default_testset(q_rel, seed=seed + 1)
    corner_defect = containment_defect(q_rel, p_rel, ts)
    bound = 4.0 * eps + 1e-8
    passed = (corner_defect <= bound) if hypothesis_ok else None
    return CommutantLemmaReport(
        hypothesis_ok=hypothesis_ok,
        eps=eps,
        projection_gap=projection_gap,
        containment_defect_pq=defect_pq,
        corner_defect=corner_defect,
        bound=bound,
        passed=passed,
    )
