"""Quantum-expander machinery.

Moment superoperator of a unitary tuple, its operator norm restricted to
the traceless subspace, a randomized search for spectral-gap unitary
pairs, certificate checking for the gap inequality, and the corner
inequality for certified pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import Matrix, _haar_from_rng, as_matrix, commutator, hs_inner, hs_norm, normalized_trace

GAP_SLACK = 1e-9
CORNER_CONSTANT = 1e5


@dataclass(frozen=True)
class UnitaryTuple:
    """k unitaries of a common dimension, the input of the moment operator."""

    dim: int
    members: tuple

    def __post_init__(self):
        mats = tuple(as_matrix(m) for m in self.members)
        if not mats:
            raise ValueError("tuple must contain at least one unitary")
        eye = np.eye(self.dim)
        for m in mats:
            if m.shape[0] != self.dim:
                raise ValueError("member dimension does not match the tuple dimension")
            if np.linalg.norm(m.conj().T @ m - eye, 2) > 1e-10:
                raise ValueError("tuple member is not unitary within 1e-10")
        object.__setattr__(self, "members", mats)

    @property
    def k(self) -> int:
        return len(self.members)


def moment_apply(u: UnitaryTuple, x) -> Matrix:
    """T_u(x) = sum_i u_i x u_i^*."""
    m = as_matrix(x)
    if m.shape[0] != u.dim:
        raise ValueError("dimension mismatch")
    out = np.zeros_like(m)
    for w in u.members:
        out += w @ m @ w.conj().T
    return out


def moment_adjoint(u: UnitaryTuple, x) -> Matrix:
    """HS adjoint of the moment operator: sum_i u_i^* x u_i."""
    m = as_matrix(x)
    if m.shape[0] != u.dim:
        raise ValueError("dimension mismatch")
    out = np.zeros_like(m)
    for w in u.members:
        out += w.conj().T @ m @ w
    return out


def _project_traceless(x: Matrix) -> Matrix:
    d = x.shape[0]
    return x - (np.trace(x) / d) * np.eye(d)


def _restricted_starts(u: UnitaryTuple, n_random: int, seed_base: int):
    """Deterministic start vectors: seeded Gaussians plus adversarial
    candidates (pairwise u_i^* u_j and a couple of matrix units)."""
    d = u.dim
    starts = []
    for r in range(n_random):
        rng = np.random.default_rng(np.random.SeedSequence((seed_base, r)))
        starts.append((rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2))
    for i in range(u.k):
        for j in range(u.k):
            if i != j:
                starts.append(u.members[i].conj().T @ u.members[j])
    e = np.zeros((d, d), dtype=complex)
    if d >= 2:
        e01 = e.copy()
        e01[0, 1] = 1.0
        starts.append(e01)
    e00 = e.copy()
    e00[0, 0] = 1.0
    starts.append(e00)
    return starts


def restricted_norm(
    u: UnitaryTuple,
    tol: float = 1e-9,
    max_iter: int = 50000,
    n_starts: int = 4,
    seed_base: int = 0xE1AD,
) -> float:
    """Operator norm of the moment operator restricted to the traceless
    subspace, by power iteration on (T^0)^* T^0.

    The trace component is projected out after every application; the
    estimate is converged to relative tolerance ``tol`` and the maximum
    over the restart schedule is returned.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    best = 0.0
    any_converged = False
    for x0 in _restricted_starts(u, n_starts, seed_base):
        x = _project_traceless(x0)
        nx = hs_norm(x)
        if nx < 1e-14:
            continue
        x = x / nx
        sigma_prev = -1.0
        for _ in range(max_iter):
            y = _project_traceless(moment_apply(u, x))
            z = _project_traceless(moment_adjoint(u, y))
            lam = float(np.real(hs_inner(z, x)))
            sigma = math.sqrt(max(lam, 0.0))
            nz = hs_norm(z)
            if nz < 1e-300:
                sigma = 0.0
                any_converged = True
                break
            x = z / nz
            if abs(sigma - sigma_prev) <= tol * max(sigma, 1e-300):
                any_converged = True
                break
            sigma_prev = sigma
        else:
            continue
        best = max(best, sigma)
    if not any_converged:
        raise RuntimeError(f"restricted_norm power iteration did not converge in {max_iter} iterations")
    return best


def restricted_norm_dense(u: UnitaryTuple) -> float:
    """Dense-superoperator route: largest singular value of the moment
    operator compressed to the traceless subspace.  Exact up to LAPACK;
    meant as an oracle at desk scale (d^2 x d^2 matrix)."""
    d = u.dim
    s = np.zeros((d * d, d * d), dtype=complex)
    for w in u.members:
        s += np.kron(w, w.conj())
    v = np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d)
    p = np.eye(d * d) - np.outer(v, v.conj())
    return float(np.linalg.svd(p @ s @ p, compute_uv=False)[0])


@dataclass(frozen=True)
class GapCertificate:
    """Certified spectral-gap data for a unitary pair.

    ``restricted_norm_value`` is the certified level c (the acceptance
    threshold of the search), so kappa = 1/(3 - c); the raw measured norm
    of the accepted triple is kept separately.  ``max_residual`` is the
    worst violation margin from ``gap_certificate_check``; it is None
    until a check has been run.
    """

    kappa: float
    restricted_norm_value: float
    trials: int
    max_residual: float | None = None
    measured_norm: float | None = None

    def __post_init__(self):
        if self.restricted_norm_value < 3.0:
            expected = 1.0 / (3.0 - self.restricted_norm_value)
            if not math.isclose(self.kappa, expected, rel_tol=1e-12):
                raise ValueError("kappa must equal 1/(3 - restricted_norm_value)")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


@dataclass(frozen=True)
class GapSearchResult:
    found: bool
    pair: tuple | None
    certificate: GapCertificate | None
    trials_used: int


def find_gap_pair(n: int, eps: float, max_trials: int, seed: int) -> GapSearchResult:
    """Randomized search for a spectral-gap pair in dimension n.

    Samples Haar triples (u1, u2, u3), forms the pair (u3^* u1, u3^* u2),
    and accepts when the restricted norm of (w1, w2, I) is at most
    2*sqrt(2) + 2*eps; the emitted certificate carries
    kappa = 1/(3 - (2*sqrt(2) + 2*eps)).  Budget exhaustion returns a
    structured failure, not an exception.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    threshold = 2.0 * math.sqrt(2.0) + 2.0 * eps
    if eps <= 0 or threshold >= 3.0:
        raise ValueError("need eps > 0 with 2*sqrt(2) + 2*eps < 3")
    if max_trials < 1:
        raise ValueError("max_trials must be positive")
    eye = np.eye(n, dtype=complex)
    for trial in range(max_trials):
        rng = np.random.default_rng(np.random.SeedSequence((seed, trial)))
        u1 = _haar_from_rng(rng, n)
        u2 = _haar_from_rng(rng, n)
        u3 = _haar_from_rng(rng, n)
        w1 = u3.conj().T @ u1
        w2 = u3.conj().T @ u2
        sigma = restricted_norm(UnitaryTuple(n, (w1, w2, eye)))
        if sigma <= threshold:
            cert = GapCertificate(
                kappa=1.0 / (3.0 - threshold),
                restricted_norm_value=threshold,
                trials=trial + 1,
                measured_norm=sigma,
            )
            return GapSearchResult(found=True, pair=(w1, w2), certificate=cert, trials_used=trial + 1)
    return GapSearchResult(found=False, pair=None, certificate=None, trials_used=max_trials)


def _adversarial_gap_samples(u1: Matrix, u2: Matrix):
    d = u1.shape[0]
    samples = [u1.copy(), u2.copy(), u2.conj().T @ u1]
    e = np.zeros((d, d), dtype=complex)
    e00 = e.copy()
    e00[0, 0] = 1.0
    samples.append(e00)
    if d >= 2:
        e01 = e.copy()
        e01[0, 1] = 1.0
        samples.append(e01)
        elast = e.copy()
        elast[d - 1, 0] = 1.0
        samples.append(elast)
    return samples


def gap_certificate_check(u1, u2, kappa: float, trials: int, seed: int) -> float:
    """Worst margin of ||x - tau(x) 1||_2 <= kappa (||[u1,x]||_2 + ||[u2,x]||_2)
    over random Gaussian samples plus adversarial candidates.

    Violations are reported through the returned margin (positive means
    violated), never raised.
    """
    a, b = as_matrix(u1), as_matrix(u2)
    d = a.shape[0]
    rng = np.random.default_rng(seed)
    worst = -math.inf
    samples = _adversarial_gap_samples(a, b)
    for _ in range(trials):
        samples.append((rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2))
    for x in samples:
        lhs = hs_norm(x - normalized_trace(x) * np.eye(d))
        rhs = kappa * (hs_norm(commutator(a, x)) + hs_norm(commutator(b, x)))
        worst = max(worst, lhs - rhs)
    return worst


def corner_check(u1, u2, kappa: float, v, x, gap_max_violation: float | None = None) -> float:
    """Margin of the corner inequality
    10^5 kappa^6 (||u1 x v - x||_2 + ||u2 x v - x||_2) - ||x||_2 >= 0.

    Refuses to evaluate unless the gap-certificate hypothesis has been
    verified: pass the worst margin returned by ``gap_certificate_check``.
    """
    if gap_max_violation is None or gap_max_violation > GAP_SLACK:
        raise ValueError(
            "gap certificate hypothesis unverified: run gap_certificate_check and pass its margin"
        )
    a, b, w, m = as_matrix(u1), as_matrix(u2), as_matrix(v), as_matrix(x)
    rhs = CORNER_CONSTANT * kappa**6 * (hs_norm(a @ m @ w - m) + hs_norm(b @ m @ w - m))
    return rhs - hs_norm(m)
