"""The deformation witness construction.

Diagonal sign unitaries on qubit legs, the singlet-projection deformation
U_t, the leg-wise automorphism theta_{t,n} of M_n (x) M_n, tensor-length
projections, the rho-weighted conditional expectation identities, the
almost-commutation audit, and the dimension upper/lower bounds with the
crossing search.

Leg convention: M_n (x) M_n is carried on 2n qubit legs in the order
(a_1 .. a_n, b_1 .. b_n); the deformation pairs leg a_k with b_k
(interleaved identification), so every family member acts on a single
(a_k, b_k) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import Matrix, TensorLegs, as_matrix, embed_leg, hs_norm, permute_legs

SIGMA = np.diag([1.0, -1.0]).astype(complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
DENSE_CAP = 5  # full 4^n-dimensional matrices up to n = 5
LEG_LOCAL_CAP = 10

# HS-orthonormal single-qubit basis: identity plus the traceless Paulis
_PAULI = np.stack(
    [
        np.eye(2, dtype=complex),
        SIGMA_X,
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        SIGMA,
    ]
)


@dataclass(frozen=True)
class WitnessParams:
    """n = number of qubit legs, t = deformation angle (radians)."""

    n: int
    t: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")


def x_ni(n: int, i: int) -> Matrix:
    """Diagonal sign unitary: sigma = diag(1, -1) placed on the i-th of n
    qubit legs (1-based).  Squares to 1 and is traceless."""
    if not 1 <= i <= n:
        raise ValueError(f"leg index {i} out of range 1..{n}")
    return embed_leg(SIGMA, TensorLegs((2,) * n), i)


def singlet_projection() -> Matrix:
    """Rank-1 orthogonal projection onto span(e1 (x) e2 - e2 (x) e1)."""
    psi = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)
    return np.outer(psi, psi.conj())


def u_t(t: float) -> Matrix:
    """Deformation unitary U_t = P + e^{it} (1 - P) on the two-qubit space."""
    p = singlet_projection()
    return p + np.exp(1j * t) * (np.eye(4) - p)


def rho(t: float) -> float:
    """(1 + cos t) / 2, the per-leg damping weight."""
    return (1.0 + math.cos(t)) / 2.0


def _pair_interleave_perm(n: int) -> list[int]:
    """Permutation that reorders (a_1..a_n, b_1..b_n) to
    (a_1, b_1, a_2, b_2, ...)."""
    perm = []
    for k in range(n):
        perm.extend([k, n + k])
    return perm


def witness_legs(n: int) -> TensorLegs:
    """Qubit legs of M_n (x) M_n in the (a_1..a_n, b_1..b_n) order."""
    return TensorLegs((2,) * (2 * n))


def _conjugate_pair(xt: np.ndarray, n: int, k: int, u4: Matrix, axes_total: int) -> np.ndarray:
    """Conjugate the (a_k, b_k) leg pair of the 4n-axis tensor by u4."""
    row_axes = (k, n + k)
    col_axes = (2 * n + k, 3 * n + k)
    xt = _apply_two_leg(xt, row_axes, u4, axes_total)
    xt = _apply_two_leg(xt, col_axes, u4.conj(), axes_total)
    return xt


def _apply_two_leg(xt: np.ndarray, axes: tuple[int, int], m4: Matrix, axes_total: int) -> np.ndarray:
    moved = np.moveaxis(xt, axes, (0, 1))
    shape = moved.shape
    flat = moved.reshape(4, -1)
    flat = m4 @ flat
    return np.moveaxis(flat.reshape(shape), (0, 1), axes)


def theta_apply(n: int, t: float, x) -> Matrix:
    """The deformation automorphism on M_n (x) M_n: conjugate each
    interleaved (a_k, b_k) pair by U_t, leg-locally."""
    m = as_matrix(x)
    if m.shape[0] != 4**n:
        raise ValueError(f"dimension {m.shape[0]} is not 4^{n}")
    u4 = u_t(t)
    xt = m.reshape((2,) * (4 * n))
    for k in range(n):
        xt = _conjugate_pair(xt, n, k, u4, 4 * n)
    return np.ascontiguousarray(xt.reshape(m.shape))


def deform_identity_checks(t: float, x, y, tol: float = 1e-12) -> dict:
    """Residuals of the single-leg deformation identities.

    (1) P (x (x) 1) P = tau(x) P;
    (2) tau((x (x) 1) U_t (y (x) 1) U_t^*) = rho_t tau(xy) + (1 - rho_t) tau(x) tau(y);
    (3) for traceless x, the conditional expectation onto U_t (M_2 (x) 1) U_t^*
        of x (x) 1 equals rho_t U_t (x (x) 1) U_t^*.

    Raises ``ValueError`` when a residual exceeds ``tol`` (identity (3) is
    only evaluated for traceless x).
    """
    from .linalg import leg_expectation, normalized_trace

    xm, ym = as_matrix(x), as_matrix(y)
    if xm.shape[0] != 2 or ym.shape[0] != 2:
        raise ValueError("x and y must be 2x2")
    p = singlet_projection()
    u = u_t(t)
    eye = np.eye(2)
    x1 = np.kron(xm, eye)
    y1 = np.kron(ym, eye)
    r = rho(t)
    res = {}
    res["singlet_compression"] = hs_norm(p @ x1 @ p - normalized_trace(xm) * p)
    lhs2 = normalized_trace(x1 @ u @ y1 @ u.conj().T)
    rhs2 = r * normalized_trace(xm @ ym) + (1 - r) * normalized_trace(xm) * normalized_trace(ym)
    res["two_point"] = abs(lhs2 - rhs2)
    if abs(normalized_trace(xm)) <= 1e-13:
        legs2 = TensorLegs((2, 2))
        ex = u @ leg_expectation(u.conj().T @ x1 @ u, legs2, (True, False)) @ u.conj().T
        res["deformed_expectation"] = hs_norm(ex - r * (u @ x1 @ u.conj().T))
    worst = max(res.values())
    if worst > tol:
        raise ValueError(f"deformation identity residual {worst:.3e} exceeds {tol:.1e}")
    return res


def _pauli_coefficients(n: int, x: Matrix) -> np.ndarray:
    """Coefficient tensor of x in the per-leg basis (1, sx, sy, sz):
    shape (4,)*n, with x = sum c[p] prod_k basis[p_k]."""
    # single-leg transform from (row, col) entries to basis coefficients
    m = _PAULI.conj().reshape(4, 4) / 2.0
    t = x.reshape((2,) * (2 * n))
    # interleave row/col axes per leg, then contract each 4-dim pair
    order = []
    for k in range(n):
        order.extend([k, n + k])
    t = np.transpose(t, order).reshape((4,) * n)
    for k in range(n):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [k])), 0, k)
    return t


def _from_pauli_coefficients(n: int, c: np.ndarray) -> Matrix:
    minv = _PAULI.reshape(4, 4).T  # entries[(r,c), p]
    t = c
    for k in range(n):
        t = np.moveaxis(np.tensordot(minv, t, axes=([1], [k])), 0, k)
    t = t.reshape((2, 2) * n)
    order = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    return np.ascontiguousarray(np.transpose(t, order).reshape(2**n, 2**n))


def length_components(n: int, x) -> list[Matrix]:
    """Orthogonal decomposition of x in M_{2^n} by tensor length: the i-th
    entry collects the terms with exactly i traceless legs."""
    m = as_matrix(x)
    if m.shape[0] != 2**n:
        raise ValueError(f"dimension {m.shape[0]} is not 2^{n}")
    c = _pauli_coefficients(n, m)
    weight = np.zeros((4,) * n, dtype=int)
    for k in range(n):
        idx = np.arange(4).reshape((1,) * k + (4,) + (1,) * (n - k - 1))
        weight = weight + (idx > 0)
    return [_from_pauli_coefficients(n, np.where(weight == i, c, 0.0)) for i in range(n + 1)]


def length_projections(n: int, x, l: int) -> tuple[Matrix, list[Matrix]]:
    """(e_l(x), [f_0(x), ..., f_n(x)]): the projection onto tensors of
    length at most l together with the full length decomposition."""
    if not 0 <= l <= n:
        raise ValueError(f"l = {l} out of range 0..{n}")
    comps = length_components(n, x)
    return sum(comps[: l + 1]), comps


def cond_expect_theta(n: int, t: float, x) -> tuple[Matrix | None, float]:
    """Conditional expectation of x (x) 1 onto the deformed copy
    theta_{t,n}(M_n (x) 1).

    Returns the rho-weighted sum sum_i rho^i theta(f_i(x) (x) 1) (None when
    4^n exceeds the dense cap) and its squared HS norm
    sum_i rho^{2i} ||f_i(x)||_2^2, which is available at any leg count.
    """
    m = as_matrix(x)
    comps = length_components(n, m)
    r = rho(t)
    norm_sq = sum(r ** (2 * i) * hs_norm(f) ** 2 for i, f in enumerate(comps))
    if n > DENSE_CAP:
        return None, norm_sq
    eye = np.eye(2**n)
    total = np.zeros((4**n, 4**n), dtype=complex)
    for i, f in enumerate(comps):
        total += r**i * theta_apply(n, t, np.kron(f, eye))
    return total, norm_sq


def deform_bound_residual(n: int, t: float, x, l: int) -> float:
    """Slack of the damping bound: (1 - rho^{2l}) ||e_l(x)||^2 + rho^{2l} ||x||^2
    minus the deformed-expectation norm; nonnegative when the bound holds."""
    el, comps = length_projections(n, x, l)
    _, norm_sq = cond_expect_theta(n, t, x)
    r2l = rho(t) ** (2 * l)
    bound = (1.0 - r2l) * hs_norm(el) ** 2 + r2l * hs_norm(as_matrix(x)) ** 2
    return bound - norm_sq


@dataclass(frozen=True)
class PairLocalUnitary:
    """Unitary on M_n (x) M_n acting as a 4x4 core on one (a_k, b_k) leg
    pair and as identity elsewhere."""

    n: int
    pair: int  # 1-based
    core: Matrix
    label: str = ""

    def __post_init__(self):
        c = as_matrix(self.core)
        if c.shape[0] != 4:
            raise ValueError("core must be 4x4")
        if not 1 <= self.pair <= self.n:
            raise ValueError(f"pair index {self.pair} out of range 1..{self.n}")
        if np.linalg.norm(c.conj().T @ c - np.eye(4), 2) > 1e-10:
            raise ValueError("core is not unitary within 1e-10")
        object.__setattr__(self, "core", c)

    def dense(self) -> Matrix:
        """Materialize on the full 4^n space (n within the dense cap)."""
        if self.n > DENSE_CAP:
            raise ValueError(f"dense realization capped at n = {DENSE_CAP}")
        n = self.n
        legs = witness_legs(n)
        rest = np.eye(4 ** (n - 1))
        base = np.kron(self.core, rest)
        # base acts on legs (a_k, b_k) first; route them to their slots
        k = self.pair - 1
        order = [k, n + k] + [i for i in range(2 * n) if i not in (k, n + k)]
        inverse = list(np.argsort(order))
        base_legs = TensorLegs(tuple(legs.legs[i] for i in order))
        return permute_legs(base, base_legs, inverse)


@dataclass
class WitnessFamily:
    """The almost-commuting witness sets: U_set = {X_{n,i} (x) 1} and the
    generating unitaries of the finite group together with their deformed
    images."""

    params: WitnessParams
    u_set: list[PairLocalUnitary] = field(default_factory=list)
    v_generators: list[PairLocalUnitary] = field(default_factory=list)
    legs: TensorLegs | None = None


def build_witness_family(n: int, t: float) -> WitnessFamily:
    """Construct the witness family at (n, t).

    The group generators are the diagonal signs on the left legs plus the
    single-leg bit/phase flips on the right legs (these generate the
    diagonal-times-full tensor algebra); the deformed half applies the
    U_t conjugation to each core.  Capped at n = 10 for leg-local use.
    """
    if n > LEG_LOCAL_CAP:
        raise ValueError(f"witness family capped at n = {LEG_LOCAL_CAP}")
    params = WitnessParams(n=n, t=t)
    eye2 = np.eye(2)
    u4 = u_t(t)
    u_set = [
        PairLocalUnitary(n, i, np.kron(SIGMA, eye2), label=f"X[{i}]ox1") for i in range(1, n + 1)
    ]
    gen_cores = []
    for j in range(1, n + 1):
        gen_cores.append((j, np.kron(SIGMA, eye2), f"G:X[{j}]ox1"))
        gen_cores.append((j, np.kron(eye2, SIGMA_X), f"G:1oxSx[{j}]"))
        gen_cores.append((j, np.kron(eye2, SIGMA), f"G:1oxSz[{j}]"))
    v_generators = [PairLocalUnitary(n, j, core, label=lab) for j, core, lab in gen_cores]
    v_generators += [
        PairLocalUnitary(n, j, u4 @ core @ u4.conj().T, label="theta:" + lab)
        for j, core, lab in gen_cores
    ]
    return WitnessFamily(params=params, u_set=u_set, v_generators=v_generators, legs=witness_legs(n))


@dataclass(frozen=True)
class AlmostCommuteAudit:
    rows: list  # (u_index, v_index, comm_hs, comm_op)
    max_comm_hs: float
    max_comm_op: float
    bound: float
    core_defect_op: float
    core_bound: float
    passed: bool


def almost_commute_audit(family: WitnessFamily, method: str = "factored", slack: float = 1e-9) -> AlmostCommuteAudit:
    """Measure ||[U, V]||_2 and ||[U, V]|| over the witness family.

    The factored method evaluates each commutator on the single leg pair
    where both operators act (exact; members act as identity elsewhere),
    so it scales to every supported n.  The dense method materializes the
    members and is available within the dense cap for cross-validation.
    """
    if method not in ("factored", "dense"):
        raise ValueError("method must be 'factored' or 'dense'")
    t = family.params.t
    rows = []
    for ui, u in enumerate(family.u_set, start=1):
        for vi, v in enumerate(family.v_generators, start=1):
            if method == "factored":
                if u.pair != v.pair:
                    comm_hs = comm_op = 0.0
                else:
                    c = u.core @ v.core - v.core @ u.core
                    comm_hs = hs_norm(c)
                    comm_op = float(np.linalg.norm(c, 2))
            else:
                ud, vd = u.dense(), v.dense()
                c = ud @ vd - vd @ ud
                comm_hs = hs_norm(c)
                comm_op = float(np.linalg.norm(c, 2))
            rows.append((ui, vi, comm_hs, comm_op))
    max_hs = max(r[2] for r in rows)
    max_op = max(r[3] for r in rows)
    bound = 4.0 * abs(t)
    sigma1 = np.kron(SIGMA, np.eye(2))
    u4 = u_t(t)
    core_defect = float(np.linalg.norm(sigma1 - u4 @ sigma1 @ u4.conj().T, 2))
    passed = (
        max_op <= bound + slack
        and max_hs <= max_op + slack
        and core_defect <= 2.0 * abs(t) + slack
    )
    return AlmostCommuteAudit(
        rows=rows,
        max_comm_hs=max_hs,
        max_comm_op=max_op,
        bound=bound,
        core_defect_op=core_defect,
        core_bound=2.0 * abs(t),
        passed=passed,
    )


def entropy_h(delta: float) -> float:
    """Binary entropy -d log2(d) - (1-d) log2(1-d) on (0, 1)."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return -delta * math.log2(delta) - (1.0 - delta) * math.log2(1.0 - delta)


def hamming_bound_check(n: int, delta: float) -> tuple[int, float]:
    """Exact Hamming-ball count sum_{i <= floor(delta n)} C(n, i) against
    2^{H(delta) n}; raises if the bound ever failed (it cannot for
    delta <= 1/2)."""
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    if n < 1:
        raise ValueError("n must be positive")
    radius = delta * n
    cutoff = round(radius) if abs(radius - round(radius)) < 1e-9 else math.floor(radius)
    total = sum(math.comb(n, i) for i in range(int(cutoff) + 1))
    bound = 2.0 ** (entropy_h(delta) * n)
    if math.log2(total) > entropy_h(delta) * n + 1e-12:
        raise RuntimeError("Hamming-ball bound violated")
    return total, bound


def diag_expect_identity(p, partition) -> float:
    """Residual between the two routes for ||p - E_C(p)||_2^2 where C is
    the diagonal algebra of the partition: the Hilbert-Schmidt projection
    on one side, the cellwise closed form
    sum_j tau(p q_j) tau((1-p) q_j) / tau(q_j) on the other."""
    pm = as_matrix(p)
    d = pm.shape[0]
    diag = np.diagonal(pm)
    if np.abs(pm - np.diag(diag)).max() > 1e-12 or np.abs(diag * (1 - diag)).max() > 1e-12:
        raise ValueError("p must be a diagonal 0/1 projection")
    cells = [list(c) for c in partition]
    flat = sorted(i for c in cells for i in c)
    if flat != list(range(d)):
        raise ValueError("partition must cover the coordinates exactly once")
    if any(len(c) == 0 for c in cells):
        raise ValueError("empty partition cell")
    bits = np.real(diag)
    # HS-projection route
    e = np.zeros(d)
    for c in cells:
        e[c] = bits[c].mean()
    lhs = float(np.sum(np.abs(bits - e) ** 2) / d)
    # cellwise closed form
    rhs = 0.0
    for c in cells:
        tq = len(c) / d
        tpq = float(bits[c].sum()) / d
        rhs += tpq * (tq - tpq) / tq
    return abs(lhs - rhs)


@dataclass(frozen=True)
class DimBoundReport:
    """log2-scale evaluation of the dimension bounds at (n, t, eps):
    ``l`` is the closed-form length cap, ``l_tight`` the defining smallest
    cutoff (diagnostic only), ``upper``/``lower`` the two bounds."""

    n: int
    t: float
    eps: float
    l: int
    l_tight: int
    upper: float
    lower: float

    @property
    def crossed(self) -> bool:
        return self.lower > self.upper


def _length_cap(t: float, eps: float) -> int:
    return int(math.ceil(64.0 * eps / t**2 + 1.0 - 1e-9))


def _length_tight(t: float, eps: float) -> int:
    r = rho(t)
    target = 1.0 - 8.0 * eps
    l = 1
    while r ** (2 * l) > target:
        l += 1
    return l


def dim_bounds(n: int, t: float, eps: float) -> DimBoundReport:
    """Upper bound 2 (6n)^{64 eps / t^2 + 1} and lower bound
    2^{n - H(4 eps) n - 3}, both on the log2 scale."""
    if not 0.0 < t <= math.pi / 4.0:
        raise ValueError("t must lie in (0, pi/4]")
    if not 0.0 < eps <= 1.0 / 16.0:
        raise ValueError("eps must lie in (0, 1/16]")
    if n < 1:
        raise ValueError("n must be positive")
    l = _length_cap(t, eps)
    upper = 1.0 + l * math.log2(6.0 * n)
    lower = n - entropy_h(4.0 * eps) * n - 3.0
    return DimBoundReport(n=n, t=t, eps=eps, l=l, l_tight=_length_tight(t, eps), upper=upper, lower=lower)


def crossing_search(t: float, eps: float, n_max: int) -> int | None:
    """Smallest n <= n_max where the exponential lower bound exceeds the
    polynomial upper bound, or None."""
    if not 0.0 < eps < 1.0 / 16.0:
        raise ValueError("eps must lie in (0, 1/16) for the crossing argument")
    for n in range(1, n_max + 1):
        if dim_bounds(n, t, eps).crossed:
            return n
    return None
