"""The Laguerre method: ladder polynomials, Lax matrices, and residual checks.

Both directions are driven by the same forward recursion pattern.  In the
spectral direction the pair (l_n, Theta_n) obeys

    l_n     = -l_{n-1} - (x - beta_n) Theta_{n-1}/gamma_n
    Theta_n = A + gamma_n Theta_{n-2}/gamma_{n-1} - (x - beta_n)(l_n - l_{n-1})

and in the deformation direction (derived componentwise from the transfer
equation d_t M_n = B_n M_n - M_n B_{n-1})

    lh_n  = lh_{n-2} + (x - beta_{n-1}) Th_{n-2}/gamma_{n-1}
            - (x - beta_n) Th_{n-1}/gamma_n + (d_t ln gamma_n) A
    Th_n  = -(d_t beta_n) A + (x - beta_n)(lh_{n-1} - lh_n)
            + gamma_n Th_{n-2}/gamma_{n-1}

The index-0 connection ratio is D/w_0 (not Theta_{-1}/gamma_0 taken
literally): that is the unique choice reproducing the n = 0 system matrix
(d Y_0 + Y_0 C) Y_0^{-1} and the closed determinant formula for the n = 0
matrix, and it is what makes the n = 1 recursion step consistent with the
Sylvester equations.  The stored sequences still begin with l_{-1} = C/2
and Theta_{-1} = w_0 D.
"""

import random
from dataclasses import dataclass

from gmpy2 import mpfr

from .errors import DegreeOverflowError, SampleAtPoleError
from .numerics import (
    Jet2,
    Mat2,
    Poly,
    RatFn,
    jet_dt,
    poly_rel_residual,
)
from .opseq import eval_polys

__all__ = [
    "LadderData",
    "LaxPair",
    "ladder_x",
    "ladder_t",
    "lax_matrices",
    "sylvester_residual",
    "det_trace_identities",
    "compatibility_residual",
    "ln_def_crosscheck",
    "default_samples",
]


@dataclass(frozen=True)
class LadderData:
    """Ladder polynomials l_n, Theta_n for n = -1..N plus their driving data."""

    direction: str
    l: tuple
    theta: tuple
    quad: object
    w0: Jet2
    rc: object
    N: int
    bound_l: int
    bound_theta: int

    def l_at(self, n):
        return self.l[n + 1]

    def theta_at(self, n):
        return self.theta[n + 1]

    def ratio(self, n):
        """Theta_{n-1}/gamma_n; the n = 0 connection ratio is D/w_0."""
        if n == 0:
            return self.quad.D / self.w0
        return self.theta_at(n - 1) / self.rc.gamma[n]

    def log_deriv_gamma(self, k):
        g = self.rc.gamma[k]
        return jet_dt(g) / g


def _bounds(quad):
    dA = quad.A.degree
    dB = quad.B.degree
    dC = quad.C.degree
    if quad.direction == "x":
        bl = max(max(dA, dB) - 1, dC)
        return bl, bl - 1
    bl = max(dA - 1, dB - 1, dC)
    bt = max(dA - 1, dB - 2, dC - 1)
    return bl, bt


def _enforce_degree(poly, bound, scale, ctx, what, strict, order=2):
    """Validate the structural degree bound and strip rounding dust above it.

    Above-bound coefficients must cancel exactly in theory; whatever the
    cancellation leaves behind is zeroed so it cannot compound through the
    gamma divisions of later recursion steps.  A non-dust coefficient means
    the driving data do not satisfy the Riccati equation: raise when strict,
    keep the evidence when not (corruption test hooks rely on this).
    """
    if len(poly.coeffs) <= bound + 1:
        return poly
    # The gamma divisions amplify cancellation roundoff by a few bits per
    # level, so the cut sits just below tol_rel: ladder dust stays orders of
    # magnitude under it, a genuine inconsistency lands orders above.
    thresh = max(ctx.drop_tol, ctx.tol_rel * mpfr(2) ** -16) * (1 + scale)
    dusty = True
    for j in range(bound + 1, len(poly.coeffs)):
        if poly.coeffs[j].max_abs(order) >= thresh:
            if strict:
                raise DegreeOverflowError(
                    f"{what}: coefficient of x^{j} is {float(poly.coeffs[j].v):.3e}, "
                    f"bound is degree {bound}; inputs do not satisfy the Riccati equation"
                )
            dusty = False
    if not dusty:
        return poly
    return Poly(poly.coeffs[: bound + 1])


def _x_minus(b):
    return Poly([-b, Jet2(1)])


def ladder_x(quad, w0, rc, N, *, ctx, strict=True):
    """Spectral-direction ladder for a quadruple (A, B, C, D) and weight data."""
    with ctx:
        bl, bt = _bounds(quad)
        half_c = quad.C * Jet2(mpfr(1) / 2)
        l = [half_c]
        theta = [quad.D * w0]
        l0 = -half_c - _x_minus(rc.beta[0]) * (quad.D / w0)
        th0 = quad.A + _x_minus(rc.beta[0]) * (half_c - l0) + quad.B * w0
        scale = max(quad.A.max_abs(), l0.max_abs(), th0.max_abs())
        l.append(_enforce_degree(l0, bl, scale, ctx, "l_0", strict))
        theta.append(_enforce_degree(th0, bt, scale, ctx, "Theta_0", strict))
        for n in range(1, N + 1):
            xm = _x_minus(rc.beta[n])
            ratio_prev = theta[n] / rc.gamma[n]  # Theta_{n-1}/gamma_n
            ln = -l[n] - xm * ratio_prev
            if n == 1:
                ratio_prev2 = quad.D / w0
            else:
                ratio_prev2 = theta[n - 1] / rc.gamma[n - 1]
            thn = quad.A + ratio_prev2 * rc.gamma[n] - xm * (ln - l[n])
            scale = max(quad.A.max_abs(), ln.max_abs(), thn.max_abs())
            l.append(_enforce_degree(ln, bl, scale, ctx, f"l_{n}", strict))
            theta.append(_enforce_degree(thn, bt, scale, ctx, f"Theta_{n}", strict))
        return LadderData("x", tuple(l), tuple(theta), quad, w0, rc, N, bl, bt)


def ladder_t(quad, w0, rc, N, *, ctx, strict=True):
    """Deformation-direction ladder; needs the jets of beta_n, gamma_n, w_0."""
    with ctx:
        bl, bt = _bounds(quad)
        lnw0p = jet_dt(w0) / w0
        half_c = quad.C * Jet2(mpfr(1) / 2)
        l = [half_c]
        theta = [quad.D * w0]
        b0 = rc.beta[0]
        l0 = -half_c - _x_minus(b0) * (quad.D / w0) + quad.A * lnw0p
        th0 = quad.A * (-jet_dt(b0)) + _x_minus(b0) * (half_c - l0) + quad.B * w0
        scale = max(quad.A.max_abs(1), l0.max_abs(1), th0.max_abs(1))
        l.append(_enforce_degree(l0, bl, scale, ctx, "lhat_0", strict, order=1))
        theta.append(_enforce_degree(th0, bt, scale, ctx, "Thetahat_0", strict, order=1))
        for n in range(1, N + 1):
            xm = _x_minus(rc.beta[n])
            ratio_prev = theta[n] / rc.gamma[n]  # Th_{n-1}/gamma_n
            if n == 1:
                ratio_prev2 = quad.D / w0
            else:
                ratio_prev2 = theta[n - 1] / rc.gamma[n - 1]
            g = rc.gamma[n]
            dlng = jet_dt(g) / g
            ln = (
                l[n - 1]
                + _x_minus(rc.beta[n - 1]) * ratio_prev2
                - xm * ratio_prev
                + quad.A * dlng
            )
            thn = (
                quad.A * (-jet_dt(rc.beta[n]))
                + xm * (l[n] - ln)
                + ratio_prev2 * g
            )
            scale = max(quad.A.max_abs(1), ln.max_abs(1), thn.max_abs(1))
            l.append(_enforce_degree(ln, bl, scale, ctx, f"lhat_{n}", strict, order=1))
            theta.append(_enforce_degree(thn, bt, scale, ctx, f"Thetahat_{n}", strict, order=1))
        return LadderData("t", tuple(l), tuple(theta), quad, w0, rc, N, bl, bt)


@dataclass(frozen=True)
class LaxPair:
    """System matrix A_n (or B_n) with its companion C (or C-hat).

    breve is the polynomial matrix A * A_n.  For the spectral direction the
    (2,2) entry has two parameterisations (the displayed one and -l_n via
    the zero-trace identity); trace_gap records their disagreement.
    """

    direction: str
    n: int
    An: Mat2
    Cmat: Mat2
    breve: Mat2
    trace_gap: mpfr


def lax_matrices(ld, n, *, ctx):
    """Assemble the Lax pair at index n from ladder data."""
    with ctx:
        quad = ld.quad
        A = quad.A
        ln = ld.l_at(n)
        thn = ld.theta_at(n)
        ratio = ld.ratio(n)
        e22 = ld.l_at(n - 1) + _x_minus(ld.rc.beta[n]) * ratio
        breve = Mat2([[RatFn(ln), RatFn(thn)], [RatFn(-ratio), RatFn(e22)]])
        An = Mat2(
            [
                [RatFn(ln, A), RatFn(thn, A)],
                [RatFn(-ratio, A), RatFn(e22, A)],
            ]
        )
        w0 = ld.w0
        if ld.direction == "x":
            trace_gap = poly_rel_residual(e22, -ln)
            cm = Mat2(
                [
                    [RatFn(quad.C * Jet2(mpfr(1) / 2), A), RatFn(-(quad.D / w0), A)],
                    [RatFn(quad.B * w0, A), RatFn(-(quad.C * Jet2(mpfr(1) / 2)), A)],
                ]
            )
        else:
            trace_gap = mpfr(0)
            lnw0p = jet_dt(w0) / w0
            c22 = -(quad.C * Jet2(mpfr(1) / 2)) + A * lnw0p
            cm = Mat2(
                [
                    [RatFn(quad.C * Jet2(mpfr(1) / 2), A), RatFn(-(quad.D / w0), A)],
                    [RatFn(quad.B * w0, A), RatFn(c22, A)],
                ]
            )
        return LaxPair(ld.direction, n, An, cm, breve, trace_gap)


def _y_matrices(rc, x, n, ctx):
    """Y_n and its exact x-derivative at a sample point, as 2x2 jet arrays."""
    ev = eval_polys(rc, x, n, ctx=ctx)
    Y = (
        (ev.P[n + 1], ev.assoc(n)),
        (ev.P[n], ev.assoc(n - 1)),
    )
    dY = (
        (ev.dP[n + 1], ev.dassoc(n)),
        (ev.dP[n], ev.dassoc(n - 1)),
    )
    return Y, dY


def _mat_mul_vals(a, b):
    return tuple(
        tuple(a[i][0] * b[0][j] + a[i][1] * b[1][j] for j in range(2)) for i in range(2)
    )


def sylvester_residual(lp, rc, samples, *, ctx):
    """Max entrywise residual of the first-order system for Y_n at the samples.

    Direction x compares the exact x-derivative of Y_n against A_n Y_n - Y_n C
    (checked through second-order jets); direction t takes d_t Y_n from the
    jet components (checked through first order).
    """
    with ctx:
        n = lp.n
        order = 2 if lp.direction == "x" else 1
        worst = mpfr(0)
        for x in samples:
            x = ctx.real(x)
            _guard_sample(lp, x)
            Y, dY = _y_matrices(rc, x, n, ctx)
            Av = lp.An.eval(x)
            Cv = lp.Cmat.eval(x)
            lhs = (
                dY
                if lp.direction == "x"
                else tuple(tuple(jet_dt(e) for e in row) for row in Y)
            )
            t1 = _mat_mul_vals(Av, Y)
            t2 = _mat_mul_vals(Y, Cv)
            for i in range(2):
                for j in range(2):
                    rhs = t1[i][j] - t2[i][j]
                    r = _component_residual(lhs[i][j], rhs, order)
                    if r > worst:
                        worst = r
        return worst


def _component_residual(lhs, rhs, order):
    comps = [(lhs.v, rhs.v)]
    if order >= 1:
        comps.append((lhs.d1, rhs.d1))
    if order >= 2:
        comps.append((lhs.d2, rhs.d2))
    worst = mpfr(0)
    for a, b in comps:
        r = abs(a - b) / (1 + abs(a) + abs(b))
        if r > worst:
            worst = r
    return worst


def _guard_sample(lp, x):
    den = lp.An[0, 0].den.eval(x)
    if abs(den.v) < mpfr(2) ** -40 * (1 + abs(x)) ** 3:
        raise SampleAtPoleError(f"sample x={x} is too close to a system pole")


def det_trace_identities(ld, n, samples, *, ctx):
    """Residuals of the trace and determinant identities of the breve matrix.

    Spectral direction: zero trace as a polynomial identity, and the
    telescoped determinant against its closed form, sampled.  Deformation
    direction: trace equals A * sum of d_t ln gamma_k (k = 0..n), and the
    determinant telescopes with the (d_t ln gamma_k) l_{k-1} - (d_t beta_k)
    Theta_{k-1}/gamma_k increments.
    """
    if n < 1:
        raise ValueError("det/trace identities need n >= 1")
    with ctx:
        quad = ld.quad
        A = quad.A
        w0 = ld.w0
        half = Jet2(mpfr(1) / 2)
        out = {}
        ln = ld.l_at(n)
        e22 = ld.l_at(n - 1) + _x_minus(ld.rc.beta[n]) * ld.ratio(n)
        det_breve = ln * e22 + ld.theta_at(n) * ld.ratio(n)
        if ld.direction == "x":
            tz = ln + e22
            scale = max(ln.max_abs(), e22.max_abs())
            out["trace"] = poly_rel_residual(tz, Poly.zero(), scale=1 + scale)
            det0 = (quad.D / w0) * (A + quad.B * w0) - quad.C * quad.C * Jet2(
                mpfr(1) / 4
            )
            tail = Poly.zero()
            for k in range(1, n + 1):
                tail = tail + ld.ratio(k)
            rhs = det0 + A * tail
            out["det"] = _sampled_poly_residual(det_breve, rhs, samples, ctx, order=2)
        else:
            lhs_tr = ln + e22
            s = Jet2(0)
            for k in range(0, n + 1):
                s = s + ld.log_deriv_gamma(k)
            rhs_tr = A * s
            out["trace"] = _sampled_poly_residual(lhs_tr, rhs_tr, samples, ctx, order=1)
            lnw0p = jet_dt(w0) / w0
            det0 = (
                (A * (-jet_dt(ld.rc.beta[0]) / w0) + quad.B) * quad.D
                + A * quad.C * (lnw0p * half)
                - quad.C * quad.C * Jet2(mpfr(1) / 4)
            )
            tail = Poly.zero()
            for k in range(1, n + 1):
                tail = (
                    tail
                    + ld.l_at(k - 1) * ld.log_deriv_gamma(k)
                    - ld.ratio(k) * jet_dt(ld.rc.beta[k])
                )
            rhs = det0 + A * tail
            out["det"] = _sampled_poly_residual(det_breve, rhs, samples, ctx, order=1)
        return out


def _sampled_poly_residual(p, q, samples, ctx, order):
    worst = mpfr(0)
    for x in samples:
        x = ctx.real(x)
        r = _component_residual(p.eval(x), q.eval(x), order)
        if r > worst:
            worst = r
    return worst


def compatibility_residual(ldx, ldt, n, samples, *, ctx):
    """Zero-curvature residual d_t A_n - d_x B_n - [B_n, A_n] at the samples.

    d_t A_n uses the jet components of its polynomial data (including the
    t-dependence of the spectral polynomial A); d_x B_n is the exact
    rational derivative.  Checked at value level.
    """
    with ctx:
        An = lax_matrices(ldx, n, ctx=ctx).An
        Bn = lax_matrices(ldt, n, ctx=ctx).An
        T1 = An.derivative_t()
        T2 = Bn.derivative_x()
        T3 = Bn.commutator(An)
        worst = mpfr(0)
        for x in samples:
            x = ctx.real(x)
            for i in range(2):
                for j in range(2):
                    a = T1[i, j].eval(x).v
                    b = T2[i, j].eval(x).v
                    c = T3[i, j].eval(x).v
                    r = abs(a - b - c) / (1 + abs(a) + abs(b) + abs(c))
                    if r > worst:
                        worst = r
        return worst


def ln_def_crosscheck(ld, n, samples, *, ctx):
    """Check the recursion-built l_n against its determinant definition.

    (prod_{k<=n} gamma_k) l_n equals the bilinear combination of the two
    polynomial families and their derivatives; evaluated at sample points.
    Only meaningful for the spectral direction.
    """
    if ld.direction != "x":
        raise ValueError("the determinant definition applies to the x-direction ladder")
    with ctx:
        rc = ld.rc
        quad = ld.quad
        w0 = ld.w0
        half = Jet2(mpfr(1) / 2)
        prod_gamma = Jet2(1)
        for k in range(1, n + 1):
            prod_gamma = prod_gamma * rc.gamma[k]
        worst = mpfr(0)
        for x in samples:
            x = ctx.real(x)
            ev = eval_polys(rc, x, n, ctx=ctx)
            Av = quad.A.eval(x)
            Cv = quad.C.eval(x)
            Bv = quad.B.eval(x)
            Dv = quad.D.eval(x)
            lhs = prod_gamma * ld.l_at(n).eval(x)
            rhs = (
                Av * (ev.dassoc(n) * ev.P[n] - ev.dP[n + 1] * ev.assoc(n - 1))
                - Cv * half * (ev.assoc(n) * ev.P[n] + ev.P[n + 1] * ev.assoc(n - 1))
                - (Dv / w0) * ev.P[n + 1] * ev.P[n]
                - Bv * w0 * ev.assoc(n) * ev.assoc(n - 1)
            )
            r = _component_residual(lhs, rhs, order=2)
            if r > worst:
                worst = r
        return worst


_DEFAULT_SAMPLES = ("-0.5", "0.3", "0.9", "1.7")
_EXCLUSION_RADIUS = 0.05


def default_samples(t, seed, *, ctx, n_random=3):
    """Fixed sample points plus seeded random ones in (-1, t), avoiding poles.

    Points within 0.05 of a zero of x(x-1)(x-t) are rejected; the random
    stream is reproducible from the seed.
    """
    with ctx:
        tf = float(t)
        poles = (0.0, 1.0, tf)
        out = []
        for s in _DEFAULT_SAMPLES:
            v = float(s)
            if all(abs(v - p) >= _EXCLUSION_RADIUS for p in poles):
                out.append(ctx.real(s))
        rng = random.Random(seed)
        remaining = n_random
        while remaining > 0:
            v = rng.uniform(-1.0, tf)
            if all(abs(v - p) >= _EXCLUSION_RADIUS for p in poles):
                out.append(ctx.real(v))
                remaining -= 1
        return out
