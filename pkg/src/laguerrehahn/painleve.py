"""Transcendent assembly and the final verification layer.

From the closed-form ladder coefficients of the transformed system this
module builds q = -vartheta_n/nu_n with full t-jets, the conjugate momentum
p, the four fixed equation parameters, and checks: the Toda flow of the
recurrence coefficients, the derivative relations for the ladder data, the
determinant evaluations at the spectral poles, both Hamilton equations, and
the second-order nonlinear equation satisfied by q.

The parameter quadruple (v_1..v_4) is pinned only up to sign flips of
(v_3+v_4, v_3-v_4); the delta parameters are flip-invariant and the flips
are Backlund-related, so the package locks a branch by minimising the
Hamilton residual at a reference point and records the choice.
"""

from dataclasses import dataclass

from gmpy2 import mpfr

from .errors import DegenerateTranscendentError, PhiMismatchError
from .mobius import nu_const
from .numerics import Jet2, jet_rel_residual, jet_var_t, rel_residual

__all__ = [
    "PainleveState",
    "phi_eval",
    "phi_polynomial",
    "pvi_state",
    "lock_branch",
    "toda_residual",
    "derivative_lemma_residuals",
    "pvi_residual",
    "hamilton_residual",
    "BRANCHES",
]

# Sign flips applied to (v3+v4, v3-v4), in deterministic lock order.
BRANCHES = ((1, 1), (1, -1), (-1, 1), (-1, -1))

# q within this absolute distance of {0, 1, t} is reported as degenerate.
DEGENERACY_TOL = mpfr(1) / 10**6


def phi_polynomial(ts, *, ctx):
    """The quartic invariant (D/w0)(A + w0 B) - C^2/4 of the transformed data."""
    with ctx:
        q = ts.qx
        w0 = ts.tw0
        return (q.D / w0) * (q.A + q.B * w0) - q.C * q.C * Jet2(mpfr(1) / 4)


def _phi_values(ts, ctx):
    with ctx:
        phi = phi_polynomial(ts, ctx=ctx)
        tj = jet_var_t(ts.params.t)
        one = Jet2(1)
        phi0 = phi.coeff(0)
        phi1 = phi.eval(one)
        phit = phi.eval(tj)
        return phi0, phi1, phit, tj


def phi_report(ts, *, ctx):
    """((phi(0), phi(1), phi(t)), residuals against the closed evaluations)."""
    with ctx:
        p = ts.params
        phi0, phi1, phit, tj = _phi_values(ts, ctx)
        quarter = Jet2(mpfr(1) / 4)
        r0 = jet_rel_residual(phi0, -(tj * tj) * Jet2(p.alpha * p.alpha) * quarter)
        r1 = jet_rel_residual(
            phi1, -((tj - 1) * (tj - 1)) * Jet2(p.beta * p.beta) * quarter
        )
        rt = jet_rel_residual(
            phit,
            -(tj * tj) * ((tj - 1) * (tj - 1)) * Jet2(p.mu * p.mu) * quarter,
        )
        return (phi0, phi1, phit), (r0, r1, rt)


def phi_eval(ts, *, ctx):
    """phi at the three spectral poles; raises if any closed evaluation fails."""
    values, residuals = phi_report(ts, ctx=ctx)
    for tag, r in zip(("0", "1", "t"), residuals):
        if r > ctx.tol_rel:
            raise PhiMismatchError(
                f"phi({tag}) residual {float(r):.3e} exceeds tolerance; "
                "the transformed Riccati data are inconsistent"
            )
    return values


@dataclass(frozen=True)
class PainleveState:
    """Transcendent data at one (n, t): q and p with jets, parameters, poles."""

    n: int
    nu_n: Jet2
    vartheta_n: Jet2
    xi_n: Jet2
    q: Jet2
    p: Jet2
    v: tuple
    delta: tuple
    phi0: Jet2
    phi1: Jet2
    phit: Jet2
    t: mpfr
    branch: tuple


def _guard_q(q, t):
    for pole, name in ((mpfr(0), "0"), (mpfr(1), "1"), (t, "t")):
        if abs(q.v - pole) < DEGENERACY_TOL:
            raise DegenerateTranscendentError(
                f"q = {float(q.v):.8f} is within {float(DEGENERACY_TOL):.0e} of {name}"
            )


def pvi_state(ts, cfl, *, ctx, branch=(1, 1)):
    """Assemble the full transcendent state from closed-form ladder data."""
    with ctx:
        p = ts.params
        t = p.t
        nu = cfl.nu_n
        th = cfl.vartheta_n
        q = -(th / nu)
        _guard_q(q, t)
        xi = th * cfl.l_n1 - nu * cfl.l_n0
        s1, s2 = branch
        # v1 - v2 = nu_n and v1 + v2 = 1 - mu: eliminating p from the
        # verified derivative identities yields the nonlinear equation with
        # first parameter delta_1 = nu_n^2/2, so the first parameter is
        # n-dependent and v1 - v2 must square to nu_n^2.  The Hamiltonian is
        # invariant under v1 <-> v2, so only the signs of (v3+v4, v3-v4)
        # are genuine branch choices.
        nv = nu.v
        v1 = (1 - p.mu + nv) / 2
        v2 = (1 - p.mu - nv) / 2
        v3 = (s1 * p.alpha + s2 * p.beta) / 2
        v4 = (s1 * p.alpha - s2 * p.beta) / 2
        delta = (
            nv * nv / 2,
            -(p.alpha**2) / 2,
            p.beta**2 / 2,
            (1 - p.mu**2) / 2,
        )
        tj = jet_var_t(t)
        one = Jet2(1)
        main = nu * q * q + q * cfl.l_n1 * 2 - q + cfl.l_n0 * 2
        pm = main / (q * (q - one) * (q - tj) * 2)
        pm = pm + Jet2(v3 + v4) / (q * 2)
        pm = pm + Jet2(v3 - v4) / ((q - one) * 2)
        pm = pm - Jet2(v1 + v2) / ((q - tj) * 2)
        phi0, phi1, phit = phi_eval(ts, ctx=ctx)
        return PainleveState(
            cfl.n, nu, th, xi, q, pm, (v1, v2, v3, v4), delta, phi0, phi1, phit, t, branch
        )


def toda_residual(ts, n, *, ctx):
    """Residuals of the two flow equations for the transformed recurrence
    coefficients: jets on the left, closed forms on the right."""
    if n < 1:
        raise ValueError("the flow equations hold for n >= 1")
    with ctx:
        p = ts.params
        t = p.t
        tb, tg = ts.trc.beta, ts.trc.gamma
        num = nu_const(p, n - 1).v
        tt1 = t * (t - 1)
        lhs_b = tt1 * tb[n].d1
        rhs_b = (
            tb[n].v * (tb[n].v - 1)
            + (num + 2) * tg[n + 1].v
            - (num - 2) * tg[n].v
        )
        r_beta = rel_residual(lhs_b, rhs_b)
        lhs_g = tt1 * (tg[n].d1 / tg[n].v)
        rhs_g = -2 + (num + 1) * tb[n].v - (num - 3) * tb[n - 1].v
        r_gamma = rel_residual(lhs_g, rhs_g)
        return r_beta, r_gamma


def derivative_lemma_residuals(ts, cfl_n, cfl_nm1, *, ctx):
    """Residuals of the t-derivative relations for the ladder coefficients,
    the three determinant evaluations at the spectral poles, and the closed
    expression of the constant ladder entry.

    Returns a dict keyed by short identity names; raises on degenerate
    denominators (q near a pole, or vanishing pole combinations).
    """
    with ctx:
        p = ts.params
        t = p.t
        n = cfl_n.n
        if cfl_nm1.n != n - 1:
            raise ValueError("need ladder data at n and n-1")
        nu = cfl_n.nu_n.v
        th = cfl_n.vartheta_n.v
        num = cfl_nm1.nu_n.v
        thm = cfl_nm1.vartheta_n.v
        q = -th / nu
        _guard_q(Jet2(q), t)
        tt1 = t * (t - 1)
        out = {}

        l0, l1 = cfl_n.l_n0, cfl_n.l_n1
        xi = th * l1.v - nu * l0.v

        # d/dt of the constant and linear ladder entries.
        g_np1 = ts.trc.gamma[n + 1].v
        rhs = l0.v / t - g_np1 * (nu * thm - th * num) / tt1
        out["dt-l0"] = rel_residual(l0.d1, rhs)
        rhs = (nu - 1) / (2 * (t - 1)) + l1.v / (t - 1) + l0.v / (t * (t - 1))
        out["dt-l1"] = rel_residual(l1.d1, rhs)
        rhs = (-th - th * th + 2 * xi) / tt1
        out["dt-vartheta"] = rel_residual(cfl_n.vartheta_n.d1, rhs)

        # Determinant evaluations at the three zeros of the spectral polynomial.
        (phi0, phi1, phit), _ = phi_report(ts, ctx=ctx)
        if min(abs(th), abs(nu + th), abs(nu * t + th)) < DEGENERACY_TOL:
            raise DegenerateTranscendentError(
                "a pole combination of the transcendent denominators vanished"
            )
        lhs = g_np1 * thm * th
        rhs = l0.v * l0.v + phi0.v
        out["det-eval-0"] = rel_residual(lhs, rhs)
        l_at_1 = cfl_n.l_n2.v + l1.v + l0.v
        lhs = g_np1 * (num + thm) * (nu + th)
        rhs = l_at_1 * l_at_1 + phi1.v
        out["det-eval-1"] = rel_residual(lhs, rhs)
        l_at_t = (cfl_n.l_n2.v * t + l1.v) * t + l0.v
        lhs = g_np1 * (num * t + thm) * (nu * t + th)
        rhs = l_at_t * l_at_t + phit.v
        out["det-eval-t"] = rel_residual(lhs, rhs)

        # Closed expression of the constant entry in terms of xi and phi.
        big = (
            -(phi0.v) / (t * (nu - 1))
            + th * phi1.v / ((t - 1) * (nu - 1) * (nu + th))
            - th * phit.v / (t * (t - 1) * (nu - 1) * (nu * t + th))
            - (
                (nu - 1) * th * (t * (t + 1) * nu + (t * t + t + 1) * th) / 4
                + (t * nu + (t + 1) * th) * xi
                + xi * xi / (nu - 1)
            )
            / ((nu + th) * (nu * t + th))
        )
        out["l0-identity"] = rel_residual(l0.v, big)
        return out


def pvi_residual(st, *, ctx):
    """Residual of the second-order nonlinear equation: q'' from jets against
    the right-hand side built from (q, q', t) and the four parameters."""
    with ctx:
        t = st.t
        q, qp, qpp = st.q.v, st.q.d1, st.q.d2
        _guard_q(st.q, t)
        d1, d2, d3, d4 = st.delta
        half = mpfr(1) / 2
        rhs = (
            half * (1 / q + 1 / (q - 1) + 1 / (q - t)) * qp * qp
            - (1 / t + 1 / (t - 1) + 1 / (q - t)) * qp
            + q
            * (q - 1)
            * (q - t)
            / (t * t * (t - 1) * (t - 1))
            * (
                d1
                + d2 * t / (q * q)
                + d3 * (t - 1) / ((q - 1) * (q - 1))
                + d4 * t * (t - 1) / ((q - t) * (q - t))
            )
        )
        return rel_residual(qpp, rhs)


def _hamiltonian_partials(st):
    t = st.t
    q, p = st.q.v, st.p.v
    v1, v2, v3, v4 = st.v
    tt1 = t * (t - 1)
    bracket = (
        (v3 + v4) * (q - 1) * (q - t)
        + (v3 - v4) * q * (q - t)
        - (v1 + v2) * q * (q - 1)
    )
    dHdp = (2 * q * (q - 1) * (q - t) * p - bracket) / tt1
    dbracket = (
        (v3 + v4) * (2 * q - 1 - t)
        + (v3 - v4) * (2 * q - t)
        - (v1 + v2) * (2 * q - 1)
    )
    dHdq = (
        (3 * q * q - 2 * (1 + t) * q + t) * p * p
        - dbracket * p
        + (v3 - v1) * (v3 - v2)
    ) / tt1
    return dHdp, dHdq


def hamilton_residual(st, *, ctx):
    """Max residual of the two Hamilton equations q' = dH/dp, p' = -dH/dq.

    The first equation is invariant under the sign flips of (v3+v4, v3-v4)
    once p is built by inverting it, so branch selection rests on the
    second; both are checked and the worse one is returned.
    """
    with ctx:
        _guard_q(st.q, st.t)
        dHdp, dHdq = _hamiltonian_partials(st)
        r1 = rel_residual(st.q.d1, dHdp)
        r2 = rel_residual(st.p.d1, -dHdq)
        return max(r1, r2)


def lock_branch(ts, cfl, *, ctx):
    """Pick the sign branch minimising the Hamilton residual at a reference
    index; deterministic tie-break on the fixed branch order."""
    best = None
    best_r = None
    for branch in BRANCHES:
        st = pvi_state(ts, cfl, ctx=ctx, branch=branch)
        r = hamilton_residual(st, ctx=ctx)
        if best_r is None or r < best_r:
            best, best_r = branch, r
    return best, best_r
