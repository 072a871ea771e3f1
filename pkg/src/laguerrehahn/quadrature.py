"""High-precision Gauss-Jacobi rules on [0,1] for the weight y^a (1-y)^b.

Nodes are the roots of the monic Jacobi polynomial, seeded from the double
precision rule and Newton-polished at working precision; weights come from
the monic-recurrence norm formula.  Rules depend only on (a, b, n, bits),
never on the deformation parameter, and are memoised.
"""

import threading

import gmpy2
import mpmath
from gmpy2 import mpfr
from scipy.special import roots_jacobi

__all__ = ["gauss_jacobi_rule_01", "GaussJacobiRule"]

_CACHE = {}
_CACHE_LOCK = threading.Lock()


class GaussJacobiRule:
    """Nodes/weights on [0,1] for the weight y^a (1-y)^b, exact at degree 2n-1."""

    __slots__ = ("a", "b", "n", "bits", "nodes", "weights")

    def __init__(self, a, b, n, bits, nodes, weights):
        self.a = a
        self.b = b
        self.n = n
        self.bits = bits
        self.nodes = nodes
        self.weights = weights

    def integrate(self, f):
        """Sum f(node) against the rule weights; f returns mpfr."""
        acc = mpfr(0)
        for y, w in zip(self.nodes, self.weights):
            acc += w * f(y)
        return acc


def _beta_function(a, b, bits):
    """Euler Beta(a, b) via mpmath at elevated precision, returned as mpfr."""
    with mpmath.workprec(bits + 30):
        val = mpmath.beta(mpmath.mpf(str(a)), mpmath.mpf(str(b)))
        s = mpmath.nstr(val, int((bits + 30) * 0.3211) + 5)
    return mpfr(s)


def _monic_jacobi_recurrence(a, b, n):
    """Gautschi-style monic recurrence for the weight (1-u)^a (1+u)^b on [-1,1].

    Returns (alphas[0..n-1], betas[0..n-1]); betas[0] is the zeroth moment.
    """
    one = mpfr(1)
    alphas = []
    betas = []
    apb = a + b
    for k in range(n):
        if k == 0:
            alphas.append((b - a) / (apb + 2))
        else:
            den = (2 * k + apb) * (2 * k + apb + 2)
            alphas.append((b * b - a * a) / den)
        if k == 0:
            betas.append(mpfr(0))  # placeholder, replaced by mu0 below
        elif k == 1:
            betas.append(4 * (a + one) * (b + one) / ((apb + 2) ** 2 * (apb + 3)))
        else:
            num = 4 * k * (k + a) * (k + b) * (k + apb)
            den = (2 * k + apb) ** 2 * (2 * k + apb + 1) * (2 * k + apb - 1)
            betas.append(num / den)
    return alphas, betas


def _eval_monic(alphas, betas, n, u):
    """(p_n, p_n', p_{n-1}) of the monic family at u via the three-term recurrence."""
    pkm1, pk = mpfr(0), mpfr(1)
    dkm1, dk = mpfr(0), mpfr(0)
    for k in range(n):
        pk1 = (u - alphas[k]) * pk - (betas[k] * pkm1 if k >= 1 else 0)
        dk1 = pk + (u - alphas[k]) * dk - (betas[k] * dkm1 if k >= 1 else 0)
        pkm1, pk = pk, pk1
        dkm1, dk = dk, dk1
    return pk, dk, pkm1


def _build_rule(a_str, b_str, n, bits):
    with gmpy2.context(precision=bits):
        a = mpfr(a_str)
        b = mpfr(b_str)
        # Exponent of (1-u) on [-1,1] pairs with the (1-y) exponent b of [0,1].
        aa, bb = b, a
        alphas, betas = _monic_jacobi_recurrence(aa, bb, n)
        mu0 = mpfr(2) ** (aa + bb + 1) * _beta_function(aa + 1, bb + 1, bits)
        betas[0] = mu0

        seeds, _ = roots_jacobi(n, float(aa), float(bb))
        eps = mpfr(2) ** (-bits + 4)
        nodes_u = []
        for s in seeds:
            u = mpfr(s)
            for _ in range(80):
                p, dp, _pm1 = _eval_monic(alphas, betas, n, u)
                step = p / dp
                u = u - step
                if abs(step) <= eps * (1 + abs(u)):
                    break
            else:
                raise ArithmeticError("Newton polish of quadrature node failed to settle")
            nodes_u.append(u)

        # h_{n-1} = mu0 * beta_1 * ... * beta_{n-1}
        h = mu0
        for k in range(1, n):
            h *= betas[k]

        scale = mpfr(2) ** (-(aa + bb + 1))
        nodes = []
        weights = []
        for u in nodes_u:
            p, dp, pm1 = _eval_monic(alphas, betas, n, u)
            lam = h / (dp * pm1)
            nodes.append((1 + u) / 2)
            weights.append(scale * lam)
        return GaussJacobiRule(a, b, n, bits, tuple(nodes), tuple(weights))


def gauss_jacobi_rule_01(a, b, n, bits):
    """Memoised n-point Gauss-Jacobi rule on [0,1] for the weight y^a (1-y)^b."""
    key = (str(a), str(b), int(n), int(bits))
    with _CACHE_LOCK:
        rule = _CACHE.get(key)
    if rule is not None:
        return rule
    rule = _build_rule(key[0], key[1], int(n), int(bits))
    with _CACHE_LOCK:
        _CACHE[key] = rule
    return rule
