"""Dense complex matrix kernel.

Normalized trace and Hilbert-Schmidt geometry, tensor-leg utilities,
Haar sampling, polar decomposition, and the branch-fixed unitary
logarithm.  Everything here treats a matrix as an element of the
tracial algebra (M_d, tau) with tau(1) = 1, so all norms are the
normalized ones: ``hs_norm(I) == 1`` regardless of dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg

Matrix = np.ndarray

DEFAULT_RANK_TOL = 1e-10
DEFAULT_UNITARY_TOL = 1e-10


def as_matrix(x) -> Matrix:
    """Coerce to a square complex128 matrix, rejecting NaN/Inf entries."""
    m = np.asarray(x, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _check_same_dim(a: Matrix, b: Matrix) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def normalized_trace(x) -> complex:
    """tau(x) = (1/d) * sum of diagonal entries."""
    m = as_matrix(x)
    return complex(np.trace(m) / m.shape[0])


def hs_inner(x, y) -> complex:
    """Normalized Hilbert-Schmidt inner product tau(y* x)."""
    a, b = as_matrix(x), as_matrix(y)
    _check_same_dim(a, b)
    # vdot conjugates its first argument, so this is trace(y^* x) / d
    return complex(np.vdot(b, a) / a.shape[0])


def hs_norm(x) -> float:
    """Normalized Hilbert-Schmidt norm: Frobenius norm / sqrt(d)."""
    m = as_matrix(x)
    return float(np.linalg.norm(m) / math.sqrt(m.shape[0]))


def trace_norm(x) -> float:
    """tau((x* x)^{1/2}), i.e. the mean of the singular values of x.

    Computed through the Hermitian eigendecomposition of x* x; LAPACK
    convergence failures propagate as ``numpy.linalg.LinAlgError``.
    """
    m = as_matrix(x)
    w = np.linalg.eigvalsh(m.conj().T @ m)
    return float(np.sqrt(np.clip(w, 0.0, None)).sum() / m.shape[0])


def op_norm(x, tol: float = 1e-10, max_iter: int = 20000) -> float:
    """Largest singular value via power iteration on x* x.

    Runs a deterministic restart schedule (four seeded Gaussian start
    vectors) and keeps the largest converged estimate.  ``tol`` is the
    relative tolerance on the singular-value estimate.

    Raises
    ------
    ValueError
        if ``tol`` is not positive.
    RuntimeError
        if no restart converges within ``max_iter`` iterations.
    """
    m = as_matrix(x)
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = m.shape[0]
    a = m.conj().T @ m
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return 0.0
    best = 0.0
    converged = False
    for restart in range(4):
        rng = np.random.default_rng(np.random.SeedSequence((0x0B5E55ED, restart)))
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v /= np.linalg.norm(v)
        sigma_prev = -1.0
        for _ in range(max_iter):
            w = a @ v
            lam = float(np.real(np.vdot(v, w)))
            sigma = math.sqrt(max(lam, 0.0))
            nw = np.linalg.norm(w)
            if nw == 0.0:
                sigma = 0.0
                converged = True
                break
            v = w / nw
            if abs(sigma - sigma_prev) <= tol * max(sigma, 1e-300):
                converged = True
                break
            sigma_prev = sigma
        else:
            continue
        best = max(best, sigma)
    if not converged:
        raise RuntimeError(f"op_norm power iteration did not converge in {max_iter} iterations")
    return best


def kron(a, b) -> Matrix:
    """Kronecker product with the row-major index convention
    (entry (i*p+k, j*q+l) = a[i,j] * b[k,l] for b of shape (p, q))."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats) -> Matrix:
    """Kronecker product of a sequence of matrices, left to right."""
    return reduce(np.kron, [as_matrix(m) for m in mats])


def commutator(a, b) -> Matrix:
    """ab - ba."""
    x, y = as_matrix(a), as_matrix(b)
    _check_same_dim(x, y)
    return x @ y - y @ x


@dataclass(frozen=True)
class TensorLegs:
    """Ordered leg dimensions describing a tensor factorization of a
    matrix space; drives the leg-local algorithms."""

    legs: tuple[int, ...]

    def __post_init__(self):
        legs = tuple(int(l) for l in self.legs)
        if not legs or any(l < 1 for l in legs):
            raise ValueError(f"legs must be positive integers, got {self.legs}")
        object.__setattr__(self, "legs", legs)

    @property
    def total(self) -> int:
        return int(np.prod(self.legs))

    def check_dim(self, dim: int) -> None:
        if dim != self.total:
            raise ValueError(f"matrix dimension {dim} does not match legs {self.legs} (total {self.total})")


def embed_leg(x, legs: TensorLegs, position: int) -> Matrix:
    """Identity-padded embedding of ``x`` at the given leg.

    ``position`` is 1-based, matching the tensor-position indexing used
    throughout the witness constructions.
    """
    m = as_matrix(x)
    dims = legs.legs
    if not 1 <= position <= len(dims):
        raise ValueError(f"position {position} out of range for {len(dims)} legs")
    if m.shape[0] != dims[position - 1]:
        raise ValueError(f"matrix dim {m.shape[0]} does not match leg {position} of size {dims[position - 1]}")
    before = int(np.prod(dims[: position - 1], initial=1))
    after = int(np.prod(dims[position:], initial=1))
    return np.kron(np.kron(np.eye(before), m), np.eye(after))


def permute_legs(x, legs: TensorLegs, perm) -> Matrix:
    """Reorder the tensor legs of an operator.

    Returns the matrix of the same operator when the legs are listed in
    the order ``perm`` (``perm[i]`` = index of the original leg placed
    at slot ``i``).
    """
    m = as_matrix(x)
    dims = legs.legs
    legs.check_dim(m.shape[0])
    perm = list(perm)
    if sorted(perm) != list(range(len(dims))):
        raise ValueError(f"perm {perm} is not a permutation of {len(dims)} legs")
    n = len(dims)
    t = m.reshape(dims + dims)
    t = np.transpose(t, axes=perm + [n + p for p in perm])
    return np.ascontiguousarray(t.reshape(m.shape))


def leg_expectation(x, legs: TensorLegs, keep) -> Matrix:
    """Conditional expectation onto the operators supported on the legs
    flagged in ``keep`` (identity on the remaining legs).

    Implemented as the normalized partial trace over the dropped legs,
    tensored back with identities; this is the trace-preserving
    projection onto the sub-tensor-factor algebra.
    """
    m = as_matrix(x)
    dims = legs.legs
    legs.check_dim(m.shape[0])
    keep = list(keep)
    if len(keep) != len(dims):
        raise ValueError("keep mask length must match number of legs")
    kept = [i for i, k in enumerate(keep) if k]
    dropped = [i for i, k in enumerate(keep) if not k]
    if not dropped:
        return m.copy()
    order = kept + dropped
    xp = permute_legs(m, legs, order)
    dk = int(np.prod([dims[i] for i in kept], initial=1))
    du = int(np.prod([dims[i] for i in dropped], initial=1))
    y = np.einsum("aubu->ab", xp.reshape(dk, du, dk, du)) / du
    ep = np.kron(y, np.eye(du))
    inverse = np.argsort(order)
    permuted_legs = TensorLegs(tuple(dims[i] for i in order))
    return permute_legs(ep, permuted_legs, inverse)


def _haar_from_rng(rng: np.random.Generator, dim: int) -> Matrix:
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r).copy()
    # phase-fix the R diagonal so the distribution is Haar (Mezzadri)
    d[d == 0] = 1.0
    return q * (d / np.abs(d))


def haar_unitary(dim: int, seed: int) -> Matrix:
    """Haar-distributed unitary: Gaussian matrix, QR, diagonal phase
    correction.  Deterministic per seed (bit-identical streams)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return _haar_from_rng(np.random.default_rng(seed), dim)


def _gaussian_from_rng(rng: np.random.Generator, dim: int) -> Matrix:
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)


def gaussian_matrix(dim: int, seed: int) -> Matrix:
    """Complex Ginibre matrix with unit-variance entries; deterministic per seed."""
    return _gaussian_from_rng(np.random.default_rng(seed), dim)


def polar_unitary(x) -> Matrix:
    """Unitary polar factor u with x = u (x* x)^{1/2}.

    Singular inputs are allowed: the kernel is completed isometrically
    by pairing the residual left/right singular vectors in SVD index
    order, which makes the output deterministic.
    """
    m = as_matrix(x)
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def is_unitary(u, tol: float = DEFAULT_UNITARY_TOL) -> bool:
    m = as_matrix(u)
    return bool(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), 2) <= tol)


def unitary_log(u, tol: float = DEFAULT_UNITARY_TOL) -> Matrix:
    """Hermitian h with exp(2*pi*i*h) = u and eigenvalues in (-1/2, 1/2].

    The branch maps eigenphase theta in (-pi, pi] to theta/(2*pi), so
    the eigenvalue -1 goes to +1/2.  Uses the complex Schur form, which
    is an eigendecomposition with exactly unitary vectors for (numerically)
    unitary input.

    Raises ``ValueError`` when the input is not unitary within ``tol``.
    """
    m = as_matrix(u)
    defect = float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), 2))
    if defect > tol:
        raise ValueError(f"input not unitary: ||u*u - 1|| = {defect:.3e} > {tol:.1e}")
    t, z = scipy.linalg.schur(m, output="complex")
    phases = np.angle(np.diagonal(t))
    phases = np.where(phases <= -np.pi, np.pi, phases)  # pin the branch cut at -1 to +1/2
    h = (z * (phases / (2.0 * np.pi))) @ z.conj().T
    return (h + h.conj().T) / 2.0


def unitary_exp(h) -> Matrix:
    """exp(2*pi*i*h) for Hermitian h, via eigendecomposition."""
    m = as_matrix(h)
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    return (v * np.exp(2j * np.pi * w)) @ v.conj().T
