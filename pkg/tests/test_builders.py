"""Emission of the exact duals / alternative systems as explicit SDPs."""

import numpy as np
import pytest

from ramanasdp import (
    DependentConstraintsError,
    SdpInstance,
    StrongDualSpec,
    SymMat,
    apply_a,
    build_alt_ram,
    build_dram,
    build_dstrong,
    build_pram,
    build_pstrong,
    build_red,
    complement_basis,
    dram_size,
    embed_certificate,
    embed_strong_point,
    pstrong_spec_from_slack,
    verify_alt_ram,
    verify_dram,
    verify_strong,
)
from ramanasdp.builders import (
    Assignment,
    max_violation,
    min_block_eigenvalue,
    objective_value,
)
from ramanasdp.verify import LadderRung, RamanaCertificate

from helpers import inst_gap_rr, inst_infeasible, inst_unattained


def _dram_cert_order3():
    z3 = SymMat.zero(3)
    return RamanaCertificate(
        system="dram",
        y=np.zeros(3),
        ladder=(
            LadderRung(y=np.array([1.0, 0, 0]), u=SymMat.diag([1, 0, 0]), v=z3),
            LadderRung(
                y=np.array([0.0, 1, 0]),
                u=SymMat.diag([1, 1, 0]),
                v=SymMat([[-1, 0, 1], [0, 0, 0], [1, 0, 0]]),
            ),
        ),
    )


class TestDram:
    def test_size_formula_hand_count(self):
        # n = 3, m = 3: two coupling blocks of order 6, three PSD blocks of
        # order 3, and m·n = 9 free scalars.
        sdp = build_dram(inst_unattained())
        orders = sorted(b.order for b in sdp.blocks)
        assert orders == [3, 3, 3, 6, 6]
        assert sdp.n_free == 9
        assert dram_size(3, 3) == (len(sdp.blocks), sdp.n_free)

    def test_size_formula_grid(self):
        for n in range(1, 11):
            for m in range(1, 11):
                inst = SdpInstance(
                    a=tuple(SymMat.zero(n) for _ in range(m)),
                    b=np.zeros(m),
                    c=SymMat.zero(n),
                )
                sdp = build_dram(inst)
                assert dram_size(n, m) == (len(sdp.blocks), sdp.n_free)
                if n >= 2:
                    assert sum(1 for b in sdp.blocks if b.order == 2 * n) == n - 1
                    assert sum(1 for b in sdp.blocks if b.order == n) == n

    def test_reference_point_embeds_feasibly(self):
        inst = inst_unattained()
        sdp = build_dram(inst)
        cert = _dram_cert_order3()
        assert verify_dram(inst, cert).ok
        asg = embed_certificate(sdp, inst, cert)
        assert max_violation(sdp, asg) <= 1e-8
        assert min_block_eigenvalue(sdp, asg) >= -1e-8
        assert objective_value(sdp, asg) == pytest.approx(0.0, abs=1e-10)

    def test_order1_degenerates_to_classical_dual(self):
        inst = SdpInstance.from_arrays([[[1.0]]], [1.0], [[2.0]])
        sdp = build_dram(inst)
        assert [b.order for b in sdp.blocks] == [1]
        assert sdp.n_free == 1
        # y = 1 gives slack 1 >= 0: one constraint P = C - y*A.
        asg = Assignment(blocks={"P": np.array([[1.0]])}, free=np.array([1.0]))
        assert max_violation(sdp, asg) <= 1e-12
        assert objective_value(sdp, asg) == pytest.approx(1.0)


class TestAltRam:
    def test_infeasible_reference_point(self):
        inst = inst_infeasible()
        sdp = build_alt_ram(inst)
        cert = RamanaCertificate(
            system="altram",
            y=np.array([0.0, 1.0]),
            ladder=(
                LadderRung(y=np.zeros(2), u=SymMat.zero(3), v=SymMat.zero(3)),
                LadderRung(y=np.array([1.0, 0]), u=SymMat.diag([1, 0, 0]), v=SymMat.zero(3)),
            ),
        )
        assert verify_alt_ram(inst, cert).ok
        asg = embed_certificate(sdp, inst, cert)
        assert max_violation(sdp, asg) <= 1e-8
        assert min_block_eigenvalue(sdp, asg) >= -1e-8

    def test_feasible_instance_alternative_unreachable(self):
        # For a feasible instance the alternative system must be infeasible:
        # candidate certificates fail verification.
        from ramanasdp import build_rr_form

        inst = inst_unattained()
        assert build_rr_form(inst).status == "feasible"
        rng = np.random.default_rng(67)
        for _ in range(10):
            cert = RamanaCertificate(
                system="altram", y=rng.standard_normal(3), ladder=()
            )
            assert not verify_alt_ram(inst, cert).ok

    def test_order1(self):
        inst = SdpInstance.from_arrays([[[1.0]]], [-1.0], [[0.0]])
        sdp = build_alt_ram(inst)
        cert = RamanaCertificate(system="altram", y=np.array([1.0]), ladder=())
        assert verify_alt_ram(inst, cert).ok
        asg = embed_certificate(sdp, inst, cert)
        assert max_violation(sdp, asg) <= 1e-12


class TestPram:
    def test_appendix_point(self):
        inst = inst_gap_rr()
        sdp = build_pram(inst)
        x = np.zeros((4, 4))
        x[1, 3] = x[3, 1] = 0.5
        cert = RamanaCertificate(
            system="pram",
            x=SymMat(x),
            ladder=(
                LadderRung(y=None, u=SymMat.zero(4), v=SymMat.zero(4)),
                LadderRung(y=None, u=SymMat.zero(4), v=SymMat.zero(4)),
                LadderRung(y=None, u=SymMat.from_outer([0, 0, 0, 1.0]), v=SymMat.zero(4)),
            ),
        )
        asg = embed_certificate(sdp, inst, cert)
        assert max_violation(sdp, asg) <= 1e-8
        assert min_block_eigenvalue(sdp, asg) >= -1e-8
        assert objective_value(sdp, asg) == pytest.approx(0.0, abs=1e-10)

    def test_order1_degenerates_to_primal(self):
        inst = SdpInstance.from_arrays([[[1.0]]], [2.0], [[3.0]])
        sdp = build_pram(inst)
        asg = Assignment(blocks={"P": np.array([[2.0]])}, free=np.array([2.0]))
        assert max_violation(sdp, asg) <= 1e-12
        assert objective_value(sdp, asg) == pytest.approx(6.0)

    def test_dependent_constraints_rejected(self):
        a = SymMat.diag([1, 0])
        inst = SdpInstance(a=(a, SymMat(2 * a.a)), b=np.zeros(2), c=SymMat.identity(2))
        with pytest.raises(DependentConstraintsError):
            build_pram(inst)

    def test_ladder_constraints_match_span_characterization(self):
        # 𝒜Y = 0 and <C, Y> = 0 iff Y = Σ λ_j D_j with Σ λ_j <D_j, C> = 0.
        inst = inst_gap_rr()
        comp = complement_basis(inst)
        rng = np.random.default_rng(71)
        d = comp.d_vals
        for _ in range(20):
            lam = rng.standard_normal(comp.ell)
            if np.linalg.norm(d) > 0:
                lam -= (lam @ d) / (d @ d) * d  # orthogonality to the values
            y = SymMat(sum(l * dj.a for l, dj in zip(lam, comp.d)))
            assert np.max(np.abs(apply_a(inst, y))) <= 1e-9
            assert abs(inst.c.inner(y)) <= 1e-9
            # Perturb off the span: the characterization must fail.
            y_bad = y + 0.5 * inst.a[0]
            assert np.max(np.abs(apply_a(inst, y_bad))) > 1e-6


class TestStrong:
    def test_dstrong_origin_feasible(self):
        inst = inst_unattained()
        spec = StrongDualSpec(q=np.eye(3), r=1)
        sdp = build_dstrong(inst, spec)
        asg = embed_strong_point(sdp, inst, spec, np.zeros(3))
        assert max_violation(sdp, asg) <= 1e-12
        assert min_block_eigenvalue(sdp, asg) >= -1e-12
        assert objective_value(sdp, asg) == pytest.approx(0.0)

    def test_dstrong_gap_value_one(self):
        inst = inst_gap_rr()
        spec = StrongDualSpec(q=np.eye(4), r=2)
        sdp = build_dstrong(inst, spec)
        y = np.array([0.0, 0.0, 1.0])
        asg = embed_strong_point(sdp, inst, spec, y)
        assert max_violation(sdp, asg) <= 1e-12
        assert min_block_eigenvalue(sdp, asg) >= -1e-12
        assert objective_value(sdp, asg) == pytest.approx(1.0)

    def test_dstrong_full_rank_is_classical_dual(self):
        inst = inst_unattained()
        spec = StrongDualSpec(q=np.eye(3), r=3)
        sdp = build_dstrong(inst, spec)
        # y = 0 embeds with V = C, whose PSD-required block is all of it;
        # C is indefinite so the assignment violates block positivity,
        # matching the classical dual's infeasibility at strict tolerance.
        asg = embed_strong_point(sdp, inst, spec, np.zeros(3))
        assert max_violation(sdp, asg) <= 1e-12
        assert min_block_eigenvalue(sdp, asg) < -1e-3
        out = verify_strong(inst, spec, np.zeros(3), "dual")
        assert not out.ok

    def test_pstrong_appendix_point(self):
        inst = inst_gap_rr()
        spec = pstrong_spec_from_slack(inst.c)
        assert spec.r == 3 and np.allclose(spec.q, np.eye(4))
        sdp = build_pstrong(inst, spec)
        x = np.zeros((4, 4))
        x[1, 3] = x[3, 1] = 0.5
        asg = embed_strong_point(sdp, inst, spec, SymMat(x))
        assert max_violation(sdp, asg) <= 1e-12
        assert min_block_eigenvalue(sdp, asg) >= -1e-12
        assert objective_value(sdp, asg) == pytest.approx(0.0)

    def test_pstrong_full_rank_is_primal(self):
        inst = inst_gap_rr()
        spec = StrongDualSpec(q=np.eye(4), r=4)
        out = verify_strong(inst, spec, SymMat.diag([0, 0, 1, 1]), "primal")
        assert out.ok and out.value == pytest.approx(1.0)
        x_bad = np.zeros((4, 4))
        x_bad[1, 3] = x_bad[3, 1] = 0.5
        assert not verify_strong(inst, spec, SymMat(x_bad), "primal").ok

    def test_pstrong_reembedded_reduced_solutions(self):
        # Random instances feasible on a planted face: interior points of
        # the face re-embed into feasible strong-primal assignments.
        from ramanasdp import build_rr_form, sample_feasible

        from helpers import random_feasible_instance, random_psd

        rng = np.random.default_rng(73)
        for _ in range(3):
            inst, _ = random_feasible_instance(rng, 4, 2, strictly=False)
            inst = SdpInstance(a=inst.a, b=inst.b, c=random_psd(rng, 4))
            rr = build_rr_form(inst)
            if rr.status != "feasible":
                continue
            sdp_red, comp = build_red(inst)
            from ramanasdp.builders import red_to_instance

            red_inst = red_to_instance(sdp_red, comp)
            rr_red = build_rr_form(red_inst)
            if rr_red.status != "feasible":
                continue
            slack = SymMat(rr_red.ref.q @ rr_red.maxrank_x.a @ rr_red.ref.q.T)
            spec = pstrong_spec_from_slack(slack)
            for x in sample_feasible(inst, rr, count=3, seed=5):
                out = verify_strong(inst, spec, x, "primal", eps=1e-6)
                assert out.ok


class TestRed:
    def test_objective_matrix_slack_satisfies_equalities(self):
        inst = inst_unattained()
        sdp, comp = build_red(inst)
        assert comp.ell == 3
        asg = Assignment(blocks={"Z": inst.c.a.copy()}, free=np.zeros(0))
        assert max_violation(sdp, asg) <= 1e-10

    def test_full_row_rank_no_equalities(self):
        inst = SdpInstance.from_arrays([[[1.0]]], [1.0], [[1.0]])
        sdp, comp = build_red(inst)
        assert comp.ell == 0
        assert len(sdp.constraints) == 0

    def test_value_shift_constant(self):
        # <X0, Z> + <y, b> = <X0, C> for every dual point y, Z = C - 𝒜*y.
        from ramanasdp import dual_slack

        inst = inst_gap_rr()
        sdp, comp = build_red(inst)
        const = comp.x0.inner(inst.c)
        rng = np.random.default_rng(79)
        for _ in range(10):
            y = np.array([rng.uniform(-3, 1), 0.0, 0.0])  # dual-feasible family
            z = dual_slack(inst, y)
            asg = Assignment(blocks={"Z": z.a.copy()}, free=np.zeros(0))
            assert max_violation(sdp, asg) <= 1e-8
            lhs = comp.x0.inner(z) + float(y @ inst.b)
            assert lhs == pytest.approx(const, abs=1e-8)


class TestVarMapRoundTrip:
    def test_extraction_reproduces_certificate(self):
        # Converse of emission soundness: reading the embedded assignment
        # back through the variable map reproduces a verifying certificate.
        from ramanasdp.builders import extract

        inst = inst_unattained()
        sdp = build_dram(inst)
        cert = _dram_cert_order3()
        asg = embed_certificate(sdp, inst, cert)
        y = extract(sdp, asg, "y")
        rungs = []
        for i in range(1, 3):
            yi = extract(sdp, asg, f"y{i}")
            u = SymMat(extract(sdp, asg, f"U{i}"))
            v = SymMat(extract(sdp, asg, "V2")) if i == 2 else SymMat.zero(3)
            rungs.append(LadderRung(y=yi, u=u, v=v))
        rebuilt = RamanaCertificate(system="dram", y=y, ladder=tuple(rungs))
        out = verify_dram(inst, rebuilt)
        assert out.ok and out.value == pytest.approx(0.0)

    def test_witness_slots_resolve(self):
        from ramanasdp.builders import extract

        inst = inst_unattained()
        sdp = build_dram(inst)
        asg = embed_certificate(sdp, inst, _dram_cert_order3())
        w = extract(sdp, asg, "W2")
        r = extract(sdp, asg, "R2")
        v = extract(sdp, asg, "V2")
        assert np.allclose(w + w.T, v)
        assert np.linalg.eigvalsh(r)[0] > 0


class TestStrictExactDualRemark:
    def test_pd_ladder_head_forces_zero_primal(self):
        # When the exact dual has a point whose first ladder matrix is PD,
        # the only primal-feasible point is X = 0.
        from ramanasdp import build_rr_form, sample_feasible, verify_dram
        from ramanasdp.verify import RamanaCertificate as RC

        a1 = SymMat.identity(3)
        a2 = SymMat.diag([1, 2, 3])
        inst = SdpInstance(a=(a1, a2), b=np.zeros(2), c=SymMat.identity(3))
        cert = RC(
            system="dram",
            y=np.zeros(2),
            ladder=(
                LadderRung(y=np.array([1.0, 0.0]), u=a1, v=SymMat.zero(3)),
                LadderRung(y=np.zeros(2), u=SymMat.zero(3), v=SymMat.zero(3)),
            ),
        )
        out = verify_dram(inst, cert)
        assert out.ok  # U_1 positive definite is accepted
        rr = build_rr_form(inst)
        assert rr.status == "feasible"
        for x in sample_feasible(inst, rr, count=5, seed=7):
            assert x.norm() <= 1e-8
