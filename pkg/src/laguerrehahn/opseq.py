"""Recurrence coefficients, polynomial evaluation, and Hankel determinants.

The moments-to-recurrence step is an LDL-style factorisation of the Hankel
matrix [w_{i+j}] over the jet ring: pivots are the squared norms h_n, the
unit-triangular inverse holds the monic polynomial coefficients, and the
Hankel determinants come back as pivot products.  Everything carries jets,
so d/dt of every recurrence coefficient is available downstream.
"""

from dataclasses import dataclass

from gmpy2 import mpfr

from .errors import RegularityError
from .numerics import Jet2

__all__ = [
    "RecurrenceCoeffs",
    "PolyPairEval",
    "recurrence_from_moments",
    "eval_polys",
    "hankel_ratio_logderiv",
]


@dataclass(frozen=True)
class RecurrenceCoeffs:
    """Three-term recurrence data x P_n = P_{n+1} + beta_n P_n + gamma_n P_{n-1}.

    gamma[0] is the zeroth moment by convention (it feeds the ladder start
    and the t-logarithmic sums); h are the squared norms, hankel the leading
    principal minors Delta_1..Delta_{N+1}.
    """

    beta: tuple
    gamma: tuple
    h: tuple
    hankel: tuple
    N: int

    def with_corruption(self, kind, index, factor):
        """Test hook: return a copy with one named coefficient scaled."""
        if kind == "beta":
            seq = list(self.beta)
        elif kind == "gamma":
            seq = list(self.gamma)
        else:
            raise ValueError(f"unknown corruption target {kind!r}")
        jet = seq[index]
        seq[index] = Jet2(jet.v * factor, jet.d1 * factor, jet.d2 * factor)
        if kind == "beta":
            return RecurrenceCoeffs(tuple(seq), self.gamma, self.h, self.hankel, self.N)
        return RecurrenceCoeffs(self.beta, tuple(seq), self.h, self.hankel, self.N)


def recurrence_from_moments(m, N, *, ctx):
    """beta_0..beta_N, gamma_0..gamma_N (gamma_0 := w_0) from a MomentTable.

    Needs moments up to 2N+2.  Raises RegularityError when a pivot falls
    below the drop threshold relative to its diagonal entry, i.e. when a
    Hankel minor is numerically zero.
    """
    if m.N < 2 * N + 2:
        raise ValueError(f"need moments up to {2 * N + 2}, table has {m.N}")
    with ctx:
        size = N + 2
        H = [[m.w[i + j] for j in range(size)] for i in range(size)]
        L = [[None] * size for _ in range(size)]
        d = [None] * size
        for j in range(size):
            acc = H[j][j]
            for k in range(j):
                acc = acc - L[j][k] * L[j][k] * d[k]
            if abs(acc.v) < ctx.drop_tol * abs(H[j][j].v):
                raise RegularityError(
                    f"Hankel minor Delta_{j + 1} is numerically zero "
                    f"(pivot {float(acc.v):.3e}); increase precision or reduce N"
                )
            d[j] = acc
            L[j][j] = Jet2(1)
            for i in range(j + 1, size):
                s = H[i][j]
                for k in range(j):
                    s = s - L[i][k] * L[j][k] * d[k]
                L[i][j] = s / acc

        # U = L^{-1}: row n holds the monic coefficients of P_n.
        U = [[None] * size for _ in range(size)]
        for n in range(size):
            for k in range(n + 1):
                if k == n:
                    U[n][k] = Jet2(1)
                else:
                    s = Jet2(0)
                    for mm in range(k, n):
                        s = s + L[n][mm] * U[mm][k]
                    U[n][k] = -s

        # Subleading coefficients a_n give beta_n = a_n - a_{n+1}.
        a = [U[n][n - 1] if n >= 1 else Jet2(0) for n in range(size)]
        beta = tuple(a[n] - a[n + 1] for n in range(N + 1))
        gamma = [m.w[0]]
        for n in range(1, N + 1):
            gamma.append(d[n] / d[n - 1])
        h = tuple(d[n] for n in range(N + 1))
        hankel = []
        acc = Jet2(1)
        for n in range(N + 2):
            acc = acc * d[n]
            hankel.append(acc)

        _crosscheck(m, beta, gamma, ctx)
        return RecurrenceCoeffs(beta, tuple(gamma), h, tuple(hankel), N)


def _crosscheck(m, beta, gamma, ctx):
    """beta_0 = w_1/w_0 and gamma_1 = w_2/w_0 - beta_0^2 must reproduce exactly."""
    b0 = m.w[1] / m.w[0]
    r = abs(beta[0].v - b0.v) / (1 + abs(b0.v))
    if r > ctx.tol_rel:
        raise ArithmeticError(f"beta_0 cross-check failed, residual {float(r):.3e}")
    if len(gamma) > 1:
        g1 = m.w[2] / m.w[0] - b0 * b0
        r = abs(gamma[1].v - g1.v) / (1 + abs(g1.v))
        if r > ctx.tol_rel:
            raise ArithmeticError(f"gamma_1 cross-check failed, residual {float(r):.3e}")


@dataclass(frozen=True)
class PolyPairEval:
    """Values and exact x-derivatives of P_n and the associated family at one x.

    P[n] holds P_n for n = 0..N+1; P1[n] holds the associated polynomial of
    index n for n = 0..N, with index -1 understood as zero.
    """

    x: mpfr
    P: tuple
    dP: tuple
    P1: tuple
    dP1: tuple

    def assoc(self, n):
        return self.P1[n] if n >= 0 else Jet2(0)

    def dassoc(self, n):
        return self.dP1[n] if n >= 0 else Jet2(0)


def eval_polys(rc, x, N, *, ctx):
    """Run both three-term recurrences (and their x-derivatives) up to index N.

    Produces P_0..P_{N+1} and associated indices 0..N; jets ride along from
    the recurrence coefficients, so .d1 of every value is its t-derivative.
    """
    if N > rc.N:
        raise ValueError(f"N={N} exceeds recurrence range {rc.N}")
    with ctx:
        x = ctx.real(x)
        one, zero = Jet2(1), Jet2(0)
        P = [one, Jet2(x) - rc.beta[0]]
        dP = [zero, one]
        for n in range(1, N + 1):
            xm = Jet2(x) - rc.beta[n]
            P.append(xm * P[n] - rc.gamma[n] * P[n - 1])
            dP.append(P[n] + xm * dP[n] - rc.gamma[n] * dP[n - 1])
        P1 = [one]
        dP1 = [zero]
        for n in range(1, N + 1):
            xm = Jet2(x) - rc.beta[n]
            prev2 = P1[n - 2] if n >= 2 else zero
            dprev2 = dP1[n - 2] if n >= 2 else zero
            P1.append(xm * P1[n - 1] - rc.gamma[n] * prev2)
            dP1.append(P1[n - 1] + xm * dP1[n - 1] - rc.gamma[n] * dprev2)
        return PolyPairEval(x, tuple(P), tuple(dP), tuple(P1), tuple(dP1))


def hankel_ratio_logderiv(rc, n, *, ctx):
    """d/dt ( ln(Delta_{n+2}/Delta_{n+1}) - ln w_0 ) from Hankel jets.

    Telescopes the product gamma_k = h_k/h_{k-1}; callers compare it against
    the direct sum of d/dt ln(gamma_k) for k = 1..n+1.
    """
    if n + 1 > rc.N:
        raise RegularityError(f"need Hankel minors up to {n + 2}, have {rc.N + 1}")
    with ctx:
        dnp2 = rc.hankel[n + 1]
        dnp1 = rc.hankel[n]
        w0 = rc.gamma[0]
        return Jet2(
            dnp2.d1 / dnp2.v - dnp1.d1 / dnp1.v - w0.d1 / w0.v,
            0,
            0,
        )
