import dataclasses

import pytest

from laguerrehahn.errors import DegenerateTranscendentError, PhiMismatchError
from laguerrehahn.mobius import build_tilde_system, closed_form_ladder
from laguerrehahn.numerics import Jet2, PrecisionContext
from laguerrehahn.painleve import (
    BRANCHES,
    derivative_lemma_residuals,
    hamilton_residual,
    lock_branch,
    phi_eval,
    phi_report,
    pvi_residual,
    pvi_state,
    toda_residual,
)
from laguerrehahn.weights import WeightParams

REF = ("0.3", "0.7", "1.5")


@pytest.fixture(scope="module")
def ctx():
    return PrecisionContext(bits=256)


@pytest.fixture(scope="module")
def ref_states(ctx320, ref_ts):
    with ctx320:
        states = {}
        for n in range(1, 7):
            cf = closed_form_ladder(ref_ts, n, ctx=ctx320)
            states[n] = pvi_state(ref_ts, cf, ctx=ctx320)
    return states


def test_phi_zero_when_alpha_zero(ctx):
    p = WeightParams.create(0, "0.6", 1, 2, ctx)
    ts = build_tilde_system(p, 1, ctx=ctx)
    with ctx:
        phi0, _phi1, _phit = phi_eval(ts, ctx=ctx)
        assert abs(phi0.v) <= ctx.tol_rel


def test_phi_closed_evaluations(ctx320, ref_ts):
    with ctx320:
        phi0, phi1, phit = phi_eval(ref_ts, ctx=ctx320)
        p = ref_ts.params
        # alpha = 0.3, t = 2 -> phi(0) = -alpha^2 t^2 / 4 = -0.09
        assert abs(phi0.v - ctx320.real("-0.09")) <= ctx320.tol_rel
        # beta = 0.7 -> phi(1) = -beta^2 (t-1)^2 / 4 = -0.1225
        assert abs(phi1.v - ctx320.real("-0.1225")) <= ctx320.tol_rel
        expect = -(p.mu**2) * p.t**2 * (p.t - 1) ** 2 / 4
        assert abs(phit.v - expect) <= ctx320.tol_rel * (1 + abs(expect))
        _, residuals = phi_report(ref_ts, ctx=ctx320)
        assert max(residuals) <= ctx320.tol_rel


def test_phi_mismatch_raises(ctx320, ref_ts):
    with ctx320:
        bad_qx = dataclasses.replace(ref_ts.qx, C=ref_ts.qx.C * ctx320.real("1.01"))
        bad_ts = dataclasses.replace(ref_ts, qx=bad_qx)
        with pytest.raises(PhiMismatchError):
            phi_eval(bad_ts, ctx=ctx320)


def test_delta_parameters(ctx320, ref_states):
    """delta_2..delta_4 are the fixed quadratic forms of the exponent data;
    delta_1 is the square of the index constant over two (the n-dependent
    first parameter of this solution family)."""
    with ctx320:
        for n, st in ref_states.items():
            d1, d2, d3, d4 = st.delta
            assert d1 == st.nu_n.v * st.nu_n.v / 2
            assert abs(d2 - ctx320.real("-0.045")) <= ctx320.tol_rel
            assert abs(d3 - ctx320.real("0.245")) <= ctx320.tol_rel
            assert abs(d4 - ctx320.real("-0.625")) <= ctx320.tol_rel
            v1, v2, v3, v4 = st.v
            assert (v1 - v2) == st.nu_n.v
            assert abs((v3 + v4) ** 2 - st.delta[1] * -2) <= ctx320.tol_rel


def test_delta_branch_invariant(ctx320, ref_ts):
    with ctx320:
        cf = closed_form_ladder(ref_ts, 2, ctx=ctx320)
        deltas = [pvi_state(ref_ts, cf, ctx=ctx320, branch=b).delta for b in BRANCHES]
        for d in deltas[1:]:
            assert d == deltas[0]


def test_first_order_q_relation(ctx320, ref_states):
    """t(t-1) q' = -q + nu q^2 - 2 xi/nu, every term from independent jets."""
    with ctx320:
        t = None
        for n, st in ref_states.items():
            t = st.t
            lhs = t * (t - 1) * st.q.d1
            rhs = -st.q.v + st.nu_n.v * st.q.v**2 - 2 * st.xi_n.v / st.nu_n.v
            assert abs(lhs - rhs) <= ctx320.tol_rel * (1 + abs(lhs) + abs(rhs))


def test_toda_reference(ctx320, ref_ts):
    with ctx320:
        for n in range(1, 7):
            rb, rg = toda_residual(ref_ts, n, ctx=ctx320)
            assert rb <= ctx320.tol_rel
            assert rg <= ctx320.tol_rel


def test_toda_corrupted(ctx320, ref_ts):
    with ctx320:
        bad = ref_ts.with_trc(ref_ts.trc.with_corruption("beta", 2, ctx320.real("1.01")))
        rb, _rg = toda_residual(bad, 2, ctx=ctx320)
        assert rb > 1000 * ctx320.tol_rel


def test_toda_mu_zero(ctx):
    p = WeightParams.create("0.4", "0.6", 0, 2, ctx)
    ts = build_tilde_system(p, 3, ctx=ctx)
    with ctx:
        for n in (1, 2, 3):
            rb, rg = toda_residual(ts, n, ctx=ctx)
            assert rb <= ctx.tol_rel and rg <= ctx.tol_rel


def test_derivative_lemma(ctx320, ref_ts):
    with ctx320:
        cfs = {n: closed_form_ladder(ref_ts, n, ctx=ctx320) for n in range(1, 5)}
        for n in (2, 3, 4):
            out = derivative_lemma_residuals(ref_ts, cfs[n], cfs[n - 1], ctx=ctx320)
            assert set(out) == {
                "dt-l0",
                "dt-l1",
                "dt-vartheta",
                "det-eval-0",
                "det-eval-1",
                "det-eval-t",
                "l0-identity",
            }
            for key, val in out.items():
                assert val <= ctx320.tol_rel, key


def test_det_eval_zero_explicit(ctx320, ref_ts):
    """gamma_{n+1} vartheta_{n-1} = (l0^2 + phi(0)) / vartheta_n at n = 3."""
    with ctx320:
        cf3 = closed_form_ladder(ref_ts, 3, ctx=ctx320)
        cf2 = closed_form_ladder(ref_ts, 2, ctx=ctx320)
        (phi0, _, _), _ = phi_report(ref_ts, ctx=ctx320)
        lhs = ref_ts.trc.gamma[4].v * cf2.vartheta_n.v
        rhs = (cf3.l_n0.v ** 2 + phi0.v) / cf3.vartheta_n.v
        assert abs(lhs - rhs) <= ctx320.tol_rel * (1 + abs(lhs) + abs(rhs))


def test_pvi_residual_reference(ctx320, ref_states):
    with ctx320:
        for n, st in ref_states.items():
            assert pvi_residual(st, ctx=ctx320) <= 10 * ctx320.tol_rel


def test_pvi_negative_control_delta_flip(ctx320, ref_states):
    with ctx320:
        st = ref_states[3]
        flipped = dataclasses.replace(
            st, delta=(st.delta[0], -st.delta[1], st.delta[2], st.delta[3])
        )
        assert pvi_residual(flipped, ctx=ctx320) > 1000 * 10 * ctx320.tol_rel


def test_hamilton_residual_reference(ctx320, ref_states):
    with ctx320:
        for n, st in ref_states.items():
            assert hamilton_residual(st, ctx=ctx320) <= 10 * ctx320.tol_rel


def test_hamilton_all_branches_equivalent(ctx320, ref_ts):
    """All four sign branches satisfy both Hamilton equations: the flips are
    exact symmetries of the Hamiltonian data, so the locked branch is a
    deterministic convention rather than a mathematical necessity."""
    with ctx320:
        cf = closed_form_ladder(ref_ts, 2, ctx=ctx320)
        for branch in BRANCHES:
            st = pvi_state(ref_ts, cf, ctx=ctx320, branch=branch)
            assert hamilton_residual(st, ctx=ctx320) <= 10 * ctx320.tol_rel
        locked, resid = lock_branch(ref_ts, cf, ctx=ctx320)
        assert locked in BRANCHES
        assert resid <= 10 * ctx320.tol_rel


def test_degenerate_transcendent_guard(ctx320, ref_states):
    with ctx320:
        st = ref_states[2]
        degenerate = dataclasses.replace(st, q=Jet2(st.t))
        with pytest.raises(DegenerateTranscendentError):
            pvi_residual(degenerate, ctx=ctx320)


def test_mu_zero_is_degenerate(ctx):
    p = WeightParams.create("0.4", "0.6", 0, 2, ctx)
    ts = build_tilde_system(p, 2, ctx=ctx)
    with ctx:
        cf = closed_form_ladder(ts, 2, ctx=ctx)
        with pytest.raises(DegenerateTranscendentError):
            pvi_state(ts, cf, ctx=ctx)
