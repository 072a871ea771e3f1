"""Moments (with t-jets) of the modified Jacobi weight and its Riccati data.

The weight is implemented as  x^alpha (1-x)^beta (t-x)^mu  on [0,1] with
t > 1, which is positive and has the same logarithmic derivatives in x and
t as the (x-t)^mu convention, hence identical Pearson data downstream.

Moment t-derivatives are computed analytically through the exponent-shift
relation  d/dt w_k = mu * w_k[mu -> mu-1], never by differentiating
quadrature nodes, so jet components carry full working precision.
"""

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .errors import CompatibilityError, IntegrabilityError, QuadratureNonconvergence
from .numerics import Jet2, Poly, jet_var_t, mpfr_to_str, rel_residual
from .quadrature import gauss_jacobi_rule_01

__all__ = [
    "WeightParams",
    "MomentTable",
    "RiccatiQuadruple",
    "moment",
    "moment_table",
    "pearson_quadruple_x",
    "pearson_quadruple_t",
]

_MIN_NODES = 32
_MAX_NODES = 4096

CACHE_SCHEMA_VERSION = 1

_cache_io_lock = threading.Lock()


@dataclass(frozen=True)
class WeightParams:
    """Exponents and deformation parameter of the weight x^a (1-x)^b (t-x)^m."""

    alpha: mpfr
    beta: mpfr
    mu: mpfr
    t: mpfr

    @classmethod
    def create(cls, alpha, beta, mu, t, ctx):
        alpha, beta, mu, t = (ctx.real(v) for v in (alpha, beta, mu, t))
        if not (alpha > -1 and beta > -1 and mu > -1):
            raise IntegrabilityError(
                f"exponents must exceed -1: alpha={alpha}, beta={beta}, mu={mu}"
            )
        if not t > 1:
            raise ValueError(f"deformation parameter must satisfy t > 1, got {t}")
        return cls(alpha, beta, mu, t)

    def key(self, bits):
        return (
            mpfr_to_str(self.alpha),
            mpfr_to_str(self.beta),
            mpfr_to_str(self.mu),
            mpfr_to_str(self.t),
            int(bits),
        )


class _MomentEngine:
    """Computes raw moment integrals for a family of mu-shifts with shared rules.

    Values are refined by doubling the node count until two successive rules
    agree to tol_rel on every requested moment (capped at 4096 nodes).
    """

    def __init__(self, params, ctx):
        self.params = params
        self.ctx = ctx
        self._vectors = {}

    def values(self, shift, kmax):
        have = self._vectors.get(shift)
        if have is not None and len(have) > kmax:
            return have
        p = self.params
        exponent = p.mu + shift
        n = max(_MIN_NODES, kmax // 2 + 2)
        prev = None
        while n <= _MAX_NODES:
            rule = gauss_jacobi_rule_01(p.alpha, p.beta, n, self.ctx.bits)
            cur = self._sum_rule(rule, exponent, kmax)
            if prev is not None:
                worst = max(
                    abs(a - b) / (1 + abs(b)) for a, b in zip(prev, cur)
                )
                if worst < self.ctx.tol_rel:
                    self._vectors[shift] = cur
                    return cur
            prev = cur
            n *= 2
        raise QuadratureNonconvergence(
            f"moment quadrature did not settle below tol_rel with {_MAX_NODES} nodes "
            f"(shift={shift}, kmax={kmax}, t={p.t})"
        )

    def _sum_rule(self, rule, exponent, kmax):
        t = self.params.t
        factors = [w * (t - y) ** exponent for y, w in zip(rule.nodes, rule.weights)]
        out = []
        powers = [mpfr(1)] * len(rule.nodes)
        for _k in range(kmax + 1):
            acc = mpfr(0)
            for f, yk in zip(factors, powers):
                acc += f * yk
            out.append(acc)
            powers = [yk * y for yk, y in zip(powers, rule.nodes)]
        return out


def _jet_moment(engine, params, k, mu_shift):
    e = params.mu + mu_shift
    v = engine.values(mu_shift, k)[k]
    if e == 0:
        d1 = mpfr(0)
    else:
        d1 = e * engine.values(mu_shift - 1, k)[k]
    c2 = e * (e - 1)
    if c2 == 0:
        d2 = mpfr(0)
    else:
        d2 = c2 * engine.values(mu_shift - 2, k)[k]
    return Jet2(v, d1, d2)


def moment(params, k, mu_shift=0, *, ctx, engine=None):
    """Single moment of x^(k+alpha) (1-x)^beta (t-x)^(mu+mu_shift) as a Jet2."""
    if k < 0:
        raise ValueError("moment index k must be nonnegative")
    if not params.mu + mu_shift > -1:
        raise IntegrabilityError(
            f"mu + mu_shift must exceed -1, got {params.mu + mu_shift}"
        )
    with ctx:
        if engine is None:
            engine = _MomentEngine(params, ctx)
        return _jet_moment(engine, params, k, mu_shift)


@dataclass(frozen=True)
class MomentTable:
    """Moments w_0..w_N with t-jets.

    For a positive measure on [0,1] the values are positive and strictly
    decreasing in k; both facts are checked at construction.
    """

    params: WeightParams
    w: tuple
    N: int

    def __post_init__(self):
        if self.w[0].v <= 0:
            raise ArithmeticError("zeroth moment must be positive")
        for k in range(self.N):
            if not self.w[k + 1].v < self.w[k].v:
                raise ArithmeticError(
                    f"moment sequence not strictly decreasing at k={k}"
                )

    def jet(self, k):
        return self.w[k]


def moment_table(params, N, *, ctx, cache_dir=None):
    """Moments 0..N of the weight, with jets; optionally served from a file cache."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if cache_dir is not None:
        cached = _cache_load(params, N, ctx, cache_dir)
        if cached is not None:
            return cached
    with ctx:
        if not params.mu > -1:
            raise IntegrabilityError(f"mu must exceed -1, got {params.mu}")
        engine = _MomentEngine(params, ctx)
        jets = tuple(_jet_moment(engine, params, k, 0) for k in range(N + 1))
        table = MomentTable(params, jets, N)
    if cache_dir is not None:
        _cache_store(table, ctx, cache_dir)
    return table


# ---------------------------------------------------------------------------
# moment cache files
# ---------------------------------------------------------------------------

def _cache_path(params, N, ctx, cache_dir):
    key = params.key(ctx.bits) + (int(N),)
    digest = hashlib.sha256(repr(key).encode()).hexdigest()[:16]
    return os.path.join(cache_dir, f"moments_{digest}.json")


def _cache_store(table, ctx, cache_dir):
    os.makedirs(cache_dir, exist_ok=True)
    doc = {
        "schema_version": CACHE_SCHEMA_VERSION,
        "kind": "moment_table",
        "alpha": mpfr_to_str(table.params.alpha),
        "beta": mpfr_to_str(table.params.beta),
        "mu": mpfr_to_str(table.params.mu),
        "t": mpfr_to_str(table.params.t),
        "bits": ctx.bits,
        "N": table.N,
        "v": [mpfr_to_str(j.v) for j in table.w],
        "d1": [mpfr_to_str(j.d1) for j in table.w],
        "d2": [mpfr_to_str(j.d2) for j in table.w],
    }
    path = _cache_path(table.params, table.N, ctx, cache_dir)
    with _cache_io_lock:
        fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh, indent=0, sort_keys=True)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _cache_load(params, N, ctx, cache_dir):
    path = _cache_path(params, N, ctx, cache_dir)
    if not os.path.exists(path):
        return None
    with _cache_io_lock:
        with open(path) as fh:
            doc = json.load(fh)
    if doc.get("schema_version") != CACHE_SCHEMA_VERSION or doc.get("N") != N:
        return None
    expect = params.key(ctx.bits)
    if (doc["alpha"], doc["beta"], doc["mu"], doc["t"], doc["bits"]) != expect:
        return None
    with ctx:
        jets = tuple(
            Jet2(mpfr(v), mpfr(d1), mpfr(d2))
            for v, d1, d2 in zip(doc["v"], doc["d1"], doc["d2"])
        )
        return MomentTable(params, jets, N)


# ---------------------------------------------------------------------------
# Riccati data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RiccatiQuadruple:
    """Polynomials (A, B, C, D) of a Riccati equation A df = B f^2 + C f + D.

    direction "x" differentiates in the spectral variable, "t" in the
    deformation parameter.
    """

    A: Poly
    B: Poly
    C: Poly
    D: Poly
    direction: str


def _poly_x_minus(c):
    """The monic linear polynomial x - c for a Jet2 c."""
    return Poly([-c, Jet2(1)])


def pearson_quadruple_x(params, w0, beta0, *, ctx):
    """Spectral-direction data: A = x(x-1)(x-t), C from the log-derivative,
    D fixed by the asymptotic expansion of the Stieltjes transform."""
    with ctx:
        a, b, m = params.alpha, params.beta, params.mu
        tj = jet_var_t(params.t)
        one = Jet2(1)
        A = Poly([Jet2(0), tj, -(one + tj), one])
        # C = a(x-1)(x-t) + b x(x-t) + m x(x-1)
        c2 = Jet2(a + b + m)
        c1 = -(Jet2(a) * (one + tj) + Jet2(b) * tj + Jet2(m))
        c0 = Jet2(a) * tj
        C = Poly([c0, c1, c2])
        d1 = -Jet2(1 + a + b + m) * w0
        d0 = (
            -Jet2(2 + a + b + m) * beta0
            + Jet2(1 + a + m)
            + Jet2(1 + a + b) * tj
        ) * w0
        D = Poly([d0, d1])
        return RiccatiQuadruple(A, Poly.zero(), C, D, "x")


def pearson_quadruple_t(params, w0, beta0, *, ctx):
    """Deformation-direction data (x-t) d_t f = -mu f + d_t w_0.

    Also asserts the cross-direction consistency D(t) + t(t-1) d_t w_0 = 0,
    which ties the two Riccati systems together; a violation signals an
    inconsistent moment table.
    """
    with ctx:
        tj = jet_var_t(params.t)
        A = Poly([-tj, Jet2(1)])
        C = Poly([Jet2(-params.mu)])
        d_hat0 = Jet2(w0.d1, w0.d2, 0)
        D = Poly([d_hat0])

        qx = pearson_quadruple_x(params, w0, beta0, ctx=ctx)
        lhs = qx.D.eval(tj).v
        rhs = -(params.t * (params.t - 1)) * w0.d1
        resid = rel_residual(lhs, rhs)
        if resid > ctx.tol_rel:
            raise CompatibilityError(
                f"D(t) + t(t-1) d_t(w0) residual {float(resid):.3e} exceeds tolerance"
            )
        return RiccatiQuadruple(A, Poly.zero(), C, D, "t")
