import math

import numpy as np
import pytest

from acnum.linalg import (
    commutator,
    gaussian_matrix,
    haar_unitary,
    hs_inner,
    hs_norm,
    kron,
    normalized_trace,
)
from acnum.subalgebra import (
    SubalgebraBasis,
    basic_construction,
    block_structure,
    commutant_basis,
    commutant_lemma_check,
    cond_expect,
    containment_defect,
    default_testset,
    generate_subalgebra,
    group_average_projection,
    lemma_close_unitary,
    subalg_distance,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def diagonal_algebra(d):
    basis = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        basis[i, i, i] = math.sqrt(d)
    return SubalgebraBasis(ambient_dim=d, basis=basis, contains_unit=True)


def scalar_algebra(d):
    return SubalgebraBasis(ambient_dim=d, basis=np.eye(d, dtype=complex)[None, :, :], contains_unit=True)


class TestGenerate:
    def test_identity_generator(self):
        alg = generate_subalgebra([np.eye(4)])
        assert alg.size == 1
        assert hs_norm(alg.basis[0] - np.eye(4)) <= 1e-12

    def test_paulis_generate_m2(self):
        alg = generate_subalgebra([SX, SZ])
        assert alg.size == 4
        alg.validate()

    def test_single_diagonal_generator(self):
        # oracle: powers of diag(1,2,3) span the full diagonal algebra
        g = np.diag([1.0, 2.0, 3.0]).astype(complex)
        powers = np.stack([np.linalg.matrix_power(g, k).reshape(-1) for k in range(3)])
        assert np.linalg.matrix_rank(powers) == 3
        alg = generate_subalgebra([g])
        assert alg.size == 3
        for b in alg.basis:
            assert np.abs(b - np.diag(np.diagonal(b))).max() <= 1e-12

    def test_idempotent(self):
        alg = generate_subalgebra([SX, SZ])
        again = generate_subalgebra(list(alg.basis))
        assert again.size == alg.size
        for b in alg.basis:
            assert again.span_residual(b) <= 1e-10

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            generate_subalgebra([])


class TestCondExpect:
    def test_scalars(self):
        x = gaussian_matrix(5, 1)
        e = cond_expect(x, scalar_algebra(5))
        assert hs_norm(e - normalized_trace(x) * np.eye(5)) <= 1e-12

    def test_diagonal_part(self):
        x = gaussian_matrix(6, 2)
        alg = diagonal_algebra(6)
        e = cond_expect(x, alg)
        assert np.abs(e - np.diag(np.diagonal(x))).max() <= 1e-12
        # defining trace identity against every diagonal matrix unit
        for i in range(6):
            y = np.zeros((6, 6), dtype=complex)
            y[i, i] = 1.0
            assert abs(normalized_trace(e @ y) - normalized_trace(x @ y)) <= 1e-10

    def test_fixes_subalgebra(self):
        alg = generate_subalgebra([SX, SZ])
        x = alg.basis[2]
        assert hs_norm(cond_expect(x, alg) - x) <= 1e-12

    def test_hs_symmetric_idempotent(self):
        alg = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        x, y = gaussian_matrix(4, 3), gaussian_matrix(4, 4)
        ex, ey = cond_expect(x, alg), cond_expect(y, alg)
        assert abs(hs_inner(ex, y) - hs_inner(x, ey)) <= 1e-10
        assert hs_norm(cond_expect(ex, alg) - ex) <= 1e-12
        assert hs_norm(ex) <= hs_norm(x) + 1e-12


class TestCommutant:
    def test_full_algebra(self):
        alg = generate_subalgebra([SX, SZ])
        com = commutant_basis(list(alg.basis))
        assert com.size == 1
        assert hs_norm(com.basis[0] @ com.basis[0].conj().T - np.eye(2)) <= 1e-10

    def test_trivial_set(self):
        com = commutant_basis([np.eye(3)])
        assert com.size == 9

    def test_tensor_factor(self):
        # oracle: nullspace rank m^2, and the span matches 1 (x) M_m
        k, m = 2, 3
        gens = [kron(SX, np.eye(m)), kron(SZ, np.eye(m))]
        com = commutant_basis(gens)
        assert com.size == m * m
        for a in range(m):
            for b in range(m):
                e = np.zeros((m, m), dtype=complex)
                e[a, b] = 1.0
                assert com.span_residual(kron(I2, e)) <= 1e-9

    def test_bicommutant(self):
        # desk-scale bicommutant: (P')' spans exactly P for unital self-adjoint P
        for gens in ([kron(SX, I2), kron(SZ, I2)], [np.diag([1.0, 2.0, 3.0]).astype(complex)]):
            p = generate_subalgebra(gens)
            pp = commutant_basis(list(commutant_basis(list(p.basis)).basis))
            assert pp.size == p.size
            for b in p.basis:
                assert pp.span_residual(b) <= 1e-9


class TestBlockStructure:
    def test_full_matrix_algebra(self):
        alg = generate_subalgebra([SX, SZ])
        bs = block_structure(alg)
        assert len(bs.blocks) == 1
        assert bs.blocks[0].factor_dim == 2
        assert bs.blocks[0].multiplicity == 1

    def test_diagonal(self):
        bs = block_structure(diagonal_algebra(4))
        assert len(bs.blocks) == 4
        assert all(b.factor_dim == 1 for b in bs.blocks)

    def test_tensor_block(self):
        # oracle: commutant of M_2 (x) 1 in M_4 has dimension 4 = mult^2
        alg = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        assert commutant_basis(list(alg.basis)).size == 4
        bs = block_structure(alg)
        assert len(bs.blocks) == 1
        assert bs.blocks[0].factor_dim == 2
        assert bs.blocks[0].multiplicity == 2

    def test_mixed_sum(self):
        # C (+) M_2 inside M_3, block sizes 1 and 2
        gens = [np.diag([5.0, 0, 0]).astype(complex)]
        e = np.zeros((3, 3), dtype=complex)
        e[1, 2] = 1.0
        gens.append(e)
        alg = generate_subalgebra(gens)
        bs = block_structure(alg)
        dims = sorted(b.factor_dim for b in bs.blocks)
        assert dims == [1, 2]
        assert bs.total_factor_sq == alg.size
        total = sum(b.central_projection for b in bs.blocks)
        assert np.linalg.norm(total - np.eye(3)) <= 1e-9

    def test_matrix_units(self):
        alg = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        blk = block_structure(alg).blocks[0]
        n = blk.factor_dim
        for i in range(n):
            for j in range(n):
                f = blk.matrix_units[i, j]
                assert np.linalg.norm(f.conj().T - blk.matrix_units[j, i]) <= 1e-8
                for k in range(n):
                    for l in range(n):
                        prod = f @ blk.matrix_units[k, l]
                        expected = blk.matrix_units[i, l] if j == k else np.zeros_like(f)
                        assert np.linalg.norm(prod - expected) <= 1e-7


class TestContainment:
    def test_contained_gives_zero(self):
        small = generate_subalgebra([kron(SZ, I2)])
        big = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        ts = default_testset(small, count=16, seed=1)
        assert containment_defect(small, big, ts) <= 1e-10

    def test_crossed_tensor_factors(self):
        # E_{1(x)M2}(sx (x) 1) = tau(sx) 1 = 0, so the defect is exactly 1
        p = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        q = generate_subalgebra([kron(I2, SX), kron(I2, SZ)])
        defect = containment_defect(p, q, [kron(SX, I2)])
        assert defect == pytest.approx(1.0, abs=1e-12)

    def test_norm_rejection(self):
        p = generate_subalgebra([SZ])
        q = generate_subalgebra([SZ])
        with pytest.raises(ValueError):
            containment_defect(p, q, [3.0 * SZ])

    def test_span_warning(self):
        p = generate_subalgebra([SZ])
        q = generate_subalgebra([SZ])
        with pytest.warns(UserWarning):
            containment_defect(p, q, [SX])

    def test_distance_symmetric_zero(self):
        p = generate_subalgebra([SX, SZ])
        ts = default_testset(p, count=8, seed=2)
        assert subalg_distance(p, p, ts, ts) <= 1e-10

    def test_refining_partitions(self):
        # coarse: {0,1}{2,3}; fine: full diagonal. d(P,Q) = defect of fine in coarse
        d = 4
        coarse_proj = [np.diag([1.0, 1, 0, 0]).astype(complex), np.diag([0.0, 0, 1, 1]).astype(complex)]
        coarse = generate_subalgebra(coarse_proj)
        fine = diagonal_algebra(d)
        ts_f = [np.diag([1.0, -1, 0, 0]).astype(complex)]
        ts_c = [coarse_proj[0]]
        dist = subalg_distance(fine, coarse, ts_f, ts_c)
        # oracle: || diag(1,-1,0,0) - its coarse average ||_2 = 1/sqrt(2)
        assert dist == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-10)


class TestBasicConstruction:
    def test_trace_of_projection_is_one(self):
        for alg in (scalar_algebra(3), diagonal_algebra(4), generate_subalgebra([SX, SZ])):
            bc = basic_construction(alg)
            assert bc.trace(bc.e_q).real == pytest.approx(1.0, abs=1e-10)
            assert abs(bc.trace(bc.e_q).imag) <= 1e-12

    def test_idempotent_self_adjoint(self):
        bc = basic_construction(diagonal_algebra(3))
        assert np.linalg.norm(bc.e_q @ bc.e_q - bc.e_q) <= 1e-12
        assert np.linalg.norm(bc.e_q - bc.e_q.conj().T) <= 1e-12

    def test_rank_scalar_in_m2(self):
        bc = basic_construction(scalar_algebra(2))
        assert int(round(np.trace(bc.e_q).real)) == 1

    def test_defining_identity(self):
        rng = np.random.default_rng(9)
        for alg in (diagonal_algebra(3), generate_subalgebra([kron(SX, I2), kron(SZ, I2)])):
            d = alg.ambient_dim
            bc = basic_construction(alg)
            for _ in range(20):
                x = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
                y = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
                lhs = bc.trace(bc.left_mult(x) @ bc.e_q @ bc.left_mult(y))
                rhs = normalized_trace(x @ y)
                assert abs(lhs - rhs) <= 1e-9

    def test_cap(self):
        with pytest.raises(ValueError):
            basic_construction(diagonal_algebra(33))


def pauli_group():
    mats = []
    for ph in (1, 1j, -1, -1j):
        for s in (I2, SX, SY, SZ):
            mats.append(ph * s)
    return mats


class TestGroupAverage:
    def test_trivial_group(self):
        bc = basic_construction(diagonal_algebra(2))
        f = group_average_projection([np.eye(2)], bc)
        assert np.linalg.norm(f - bc.e_q) <= 1e-12

    def test_pauli_group_commutes(self):
        bc = basic_construction(scalar_algebra(2))
        f = group_average_projection(pauli_group(), bc)
        for g in pauli_group():
            lg = np.kron(g, np.eye(2))
            assert np.linalg.norm(lg @ f - f @ lg) <= 1e-9

    def test_averaging_identity(self):
        # ||f - e_Q||_{2,Tr}^2 = |G|^{-1} sum ||U - E_Q(U)||_2^2
        q = scalar_algebra(2)
        bc = basic_construction(q)
        g = pauli_group()
        f = group_average_projection(g, bc)
        lhs = bc.hs_norm_tr(f - bc.e_q) ** 2
        rhs = float(np.mean([hs_norm(u - cond_expect(u, q)) ** 2 for u in g]))
        assert lhs == pytest.approx(rhs, abs=1e-9)
        # frozen analytic value for the Pauli group over the scalars: 3/4
        assert lhs == pytest.approx(0.75, abs=1e-9)

    def test_not_a_group(self):
        bc = basic_construction(scalar_algebra(2))
        with pytest.raises(ValueError):
            group_average_projection([SX, SZ], bc)


class TestLemmaCloseUnitary:
    def test_fixed_point(self):
        p = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        u = kron(haar_unitary(2, seed=3), I2)
        v = lemma_close_unitary(u, p)
        assert hs_norm(v - u) <= 1e-8

    def test_scalar_algebra_phase(self):
        p = scalar_algebra(3)
        u = haar_unitary(3, seed=4)
        v = lemma_close_unitary(u, p)
        tau = normalized_trace(u)
        assert hs_norm(v - (tau / abs(tau)) * np.eye(3)) <= 1e-9
        assert hs_norm(u - v) <= 3.0 * hs_norm(u - cond_expect(u, p)) + 1e-9

    def test_diagonal_algebra_entrywise_phases(self):
        p = diagonal_algebra(5)
        u = haar_unitary(5, seed=5)
        v = lemma_close_unitary(u, p)
        diag = np.diagonal(u)
        expected = np.diag(diag / np.abs(diag))
        assert hs_norm(v - expected) <= 1e-9
        assert hs_norm(u - v) <= 3.0 * hs_norm(u - cond_expect(u, p)) + 1e-9

    def test_bound_random(self):
        p = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        for seed in range(4):
            u = haar_unitary(4, seed=seed)
            v = lemma_close_unitary(u, p)
            assert np.linalg.norm(v.conj().T @ v - np.eye(4)) <= 1e-8
            assert p.span_residual(v) <= 1e-8
            assert hs_norm(u - v) <= 3.0 * hs_norm(u - cond_expect(u, p)) + 1e-9


class TestCommutantLemma:
    def test_equal_algebras(self):
        p = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        eye = np.eye(4, dtype=complex)
        rep = commutant_lemma_check(p, eye, p, eye, eps=1e-6)
        assert rep.hypothesis_ok
        assert rep.containment_defect_pq <= 1e-9
        assert rep.corner_defect <= 1e-9
        assert rep.passed

    def test_conjugated_perturbation(self):
        # uPu* with u close to 1: hypothesis defect is small and the 4-eps bound holds
        d = 4
        p = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        h = gaussian_matrix(d, 8)
        h = (h + h.conj().T) / 2
        h /= np.linalg.norm(h, 2)
        from acnum.linalg import unitary_exp

        u = unitary_exp(0.004 * h)
        q = generate_subalgebra([u @ b @ u.conj().T for b in p.basis])
        eps = 0.05
        eye = np.eye(d, dtype=complex)
        rep = commutant_lemma_check(p, eye, q, eye, eps=eps, seed=3)
        assert rep.hypothesis_ok
        assert rep.passed

    def test_hypothesis_failure_reported(self):
        p = generate_subalgebra([kron(SX, I2), kron(SZ, I2)])
        q = generate_subalgebra([kron(I2, SX), kron(I2, SZ)])
        eye = np.eye(4, dtype=complex)
        rep = commutant_lemma_check(p, eye, q, eye, eps=1e-3)
        assert not rep.hypothesis_ok
        assert rep.passed is None
