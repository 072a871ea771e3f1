"""Precision-controlled scalar, jet, polynomial, and 2x2 matrix arithmetic.

Scalars are gmpy2 ``mpfr`` values rounded at the precision of the ambient
gmpy2 thread context.  ``PrecisionContext`` installs that context; every
pipeline entry point runs inside ``with ctx:``.  All values here are
immutable after construction and all operations are pure, so evaluation is
safe across threads (gmpy2 contexts are thread-local).

A ``Jet2`` carries a value together with its first and second derivatives
with respect to the deformation parameter t, propagated exactly through
ring operations (Leibniz rule).  Polynomials in the spectral variable x
have ``Jet2`` coefficients, so every polynomial identity can be checked
together with its t-derivatives.
"""

from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

__all__ = [
    "PrecisionContext",
    "Jet2",
    "jet_lift",
    "jet_var_t",
    "jet_dt",
    "Poly",
    "poly_derivative_x",
    "RatFn",
    "Mat2",
    "rel_residual",
    "jet_rel_residual",
    "mpfr_to_str",
]

# Extra bits below working precision treated as structural zero ("dust").
DUST_MARGIN_BITS = 16


class PrecisionContext:
    """Working precision plus the derived tolerances.

    bits     -- mantissa precision for every scalar operation (>= 64)
    tol_rel  -- relative residual target, default 2**(-bits/2)

    Use as a context manager: entering installs a gmpy2 context with the
    requested precision for the current thread and leaving restores the
    previous one.  Re-entrant.
    """

    def __init__(self, bits=320, tol_rel=None):
        if int(bits) < 64:
            raise ValueError(f"bits must be >= 64, got {bits}")
        self.bits = int(bits)
        with gmpy2.context(precision=self.bits):
            if tol_rel is None:
                self.tol_rel = mpfr(2) ** (-(self.bits // 2))
            else:
                self.tol_rel = mpfr(tol_rel)
            if not self.tol_rel > 0:
                raise ValueError("tol_rel must be positive")
            # Coefficients below drop_tol * (max coefficient) count as zero
            # when determining polynomial degrees.
            self.drop_tol = mpfr(2) ** (-self.bits + DUST_MARGIN_BITS)
        self._saved = []

    def __enter__(self):
        self._saved.append(gmpy2.get_context())
        gmpy2.set_context(gmpy2.context(precision=self.bits))
        return self

    def __exit__(self, exc_type, exc, tb):
        gmpy2.set_context(self._saved.pop())
        return False

    def real(self, x):
        """Convert x (str, int, float, Fraction, mpfr) to mpfr at this precision."""
        with self:
            if isinstance(x, Fraction):
                return mpfr(x.numerator) / mpfr(x.denominator)
            return mpfr(x)

    def __repr__(self):
        return f"PrecisionContext(bits={self.bits}, tol_rel={float(self.tol_rel):.3e})"


def _as_mpfr(x):
    if isinstance(x, mpfr):
        return x
    if isinstance(x, Fraction):
        return mpfr(x.numerator) / mpfr(x.denominator)
    return mpfr(x)


_ZERO = None  # set lazily per-precision; plain mpfr(0) is precision-free anyway


class Jet2:
    """Value plus first and second t-derivatives at a fixed t.

    Ring operations propagate the derivative components exactly:
        (a*b).d1 = a.v*b.d1 + a.d1*b.v
        (a*b).d2 = a.v*b.d2 + 2*a.d1*b.d1 + a.d2*b.v
    Division requires a nonzero value component.
    """

    __slots__ = ("v", "d1", "d2")

    def __init__(self, v, d1=0, d2=0):
        self.v = _as_mpfr(v)
        self.d1 = _as_mpfr(d1)
        self.d2 = _as_mpfr(d2)

    # -- coercion -----------------------------------------------------------
    @staticmethod
    def _coerce(other):
        if isinstance(other, Jet2):
            return other
        if isinstance(other, (int, float, mpfr, Fraction)):
            return Jet2(other)
        return None

    # -- ring operations -----------------------------------------------------
    def __add__(self, other):
        o = Jet2._coerce(other)
        if o is None:
            return NotImplemented
        return Jet2(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __sub__(self, other):
        o = Jet2._coerce(other)
        if o is None:
            return NotImplemented
        return Jet2(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)

    def __rsub__(self, other):
        o = Jet2._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Jet2(-self.v, -self.d1, -self.d2)

    def __mul__(self, other):
        if isinstance(other, (int, float, mpfr)):
            return Jet2(self.v * other, self.d1 * other, self.d2 * other)
        o = Jet2._coerce(other)
        if o is None:
            return NotImplemented
        return Jet2(
            self.v * o.v,
            self.v * o.d1 + self.d1 * o.v,
            self.v * o.d2 + 2 * self.d1 * o.d1 + self.d2 * o.v,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Jet2._coerce(other)
        if o is None:
            return NotImplemented
        if o.v == 0:
            raise ZeroDivisionError("Jet2 division by a jet with zero value component")
        q = self.v / o.v
        q1 = (self.d1 - q * o.d1) / o.v
        q2 = (self.d2 - 2 * q1 * o.d1 - q * o.d2) / o.v
        return Jet2(q, q1, q2)

    def __rtruediv__(self, other):
        o = Jet2._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        out = Jet2(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- queries --------------------------------------------------------------
    def max_abs(self, order=2):
        m = abs(self.v)
        if order >= 1 and abs(self.d1) > m:
            m = abs(self.d1)
        if order >= 2 and abs(self.d2) > m:
            m = abs(self.d2)
        return m

    def __eq__(self, other):
        o = Jet2._coerce(other)
        if o is None:
            return NotImplemented
        return self.v == o.v and self.d1 == o.d1 and self.d2 == o.d2

    def __hash__(self):
        return hash((self.v, self.d1, self.d2))

    def __repr__(self):
        return f"Jet2({self.v!r}, {self.d1!r}, {self.d2!r})"


def jet_lift(c):
    """Lift a t-constant scalar to a jet: c -> (c, 0, 0)."""
    return Jet2(c, 0, 0)


def jet_var_t(t):
    """The deformation variable itself as a jet: t -> (t, 1, 0)."""
    return Jet2(t, 1, 0)


def jet_dt(a):
    """Formal t-derivative of a jet.

    The second-derivative slot of the result would need third-order data,
    which a Jet2 does not carry; it is set to zero and must not be used.
    Safe wherever only the value (and first derivative) of the result enters,
    which is the case for all residual evaluations in this package.
    """
    return Jet2(a.d1, a.d2, 0)


def rel_residual(lhs, rhs):
    """Scale-free residual |lhs-rhs| / (1 + |lhs| + |rhs|) on mpfr scalars."""
    lhs = _as_mpfr(lhs)
    rhs = _as_mpfr(rhs)
    return abs(lhs - rhs) / (1 + abs(lhs) + abs(rhs))


def jet_rel_residual(lhs, rhs, order=2):
    """Componentwise relative residual of two jets, up to derivative `order`."""
    parts = [rel_residual(lhs.v, rhs.v)]
    if order >= 1:
        parts.append(rel_residual(lhs.d1, rhs.d1))
    if order >= 2:
        parts.append(rel_residual(lhs.d2, rhs.d2))
    return max(parts)


def _ambient_drop_tol():
    bits = gmpy2.get_context().precision
    return mpfr(2) ** (-bits + DUST_MARGIN_BITS)


class Poly:
    """Dense univariate polynomial in x with Jet2 coefficients (ascending powers).

    Coefficients are stored as given; the reported degree ignores trailing
    "dust" (coefficients below 2**(-bits+16) times the largest coefficient),
    so structural cancellations are recognised without ever mutating data.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = []
        for c in coeffs:
            cs.append(c if isinstance(c, Jet2) else Jet2(c))
        if not cs:
            cs = [Jet2(0)]
        self.coeffs = tuple(cs)

    # -- constructors ---------------------------------------------------------
    @staticmethod
    def constant(c):
        return Poly([c])

    @staticmethod
    def zero():
        return Poly([Jet2(0)])

    @staticmethod
    def x():
        return Poly([Jet2(0), Jet2(1)])

    # -- structure ------------------------------------------------------------
    def max_abs(self, order=2):
        m = mpfr(0)
        for c in self.coeffs:
            a = c.max_abs(order)
            if a > m:
                m = a
        return m

    @property
    def degree(self):
        """Index of the last coefficient above the drop threshold; -1 if none."""
        scale = self.max_abs()
        if scale == 0:
            return -1
        thresh = _ambient_drop_tol() * scale
        deg = -1
        for i, c in enumerate(self.coeffs):
            if c.max_abs() >= thresh:
                deg = i
        return deg

    def coeff(self, i):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return Jet2(0)

    # -- ring operations --------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float, mpfr, Jet2, Fraction)):
            other = Poly.constant(other)
        if not isinstance(other, Poly):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly([self.coeff(i) + other.coeff(i) for i in range(n)])

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float, mpfr, Jet2, Fraction)):
            other = Poly.constant(other)
        if not isinstance(other, Poly):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly([self.coeff(i) - other.coeff(i) for i in range(n)])

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, (int, float, mpfr, Jet2, Fraction)):
            o = other if isinstance(other, Jet2) else Jet2(other)
            return Poly([c * o for c in self.coeffs])
        if not isinstance(other, Poly):
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        out = [Jet2(0) for _ in range(len(a) + len(b) - 1)]
        for i, ca in enumerate(a):
            for j, cb in enumerate(b):
                out[i + j] = out[i + j] + ca * cb
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        """Division by a scalar or jet (coefficientwise)."""
        if isinstance(other, (int, float, mpfr, Fraction)):
            other = Jet2(other)
        if isinstance(other, Jet2):
            return Poly([c / other for c in self.coeffs])
        return NotImplemented

    # -- calculus and evaluation --------------------------------------------------
    def derivative_x(self):
        """Exact formal d/dx (coefficient shift-scale)."""
        if len(self.coeffs) <= 1:
            return Poly.zero()
        return Poly([self.coeffs[i] * i for i in range(1, len(self.coeffs))])

    def eval(self, x):
        """Horner evaluation; x may be an mpfr (t-independent point) or a Jet2."""
        if isinstance(x, Jet2):
            acc = Jet2(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        x = _as_mpfr(x)
        acc = Jet2(0)
        for c in reversed(self.coeffs):
            acc = Jet2(acc.v * x + c.v, acc.d1 * x + c.d1, acc.d2 * x + c.d2)
        return acc

    def dt_coeffs(self):
        """Polynomial of the coefficientwise t-derivatives (see jet_dt caveat)."""
        return Poly([jet_dt(c) for c in self.coeffs])

    def __repr__(self):
        return f"Poly(deg<={len(self.coeffs) - 1}, coeffs={[str(c.v) for c in self.coeffs]})"


def poly_derivative_x(p):
    """Exact formal derivative of p with respect to x."""
    return p.derivative_x()


def poly_rel_residual(p, q, scale=None, order=2):
    """Max componentwise residual of two polynomials relative to a common scale.

    The scale defaults to 1 + max-coefficient of either side, so a pair of
    polynomials that both vanish to rounding dust compares as equal.
    """
    if scale is None:
        scale = 1 + max(p.max_abs(), q.max_abs())
    diff = p - q
    worst = mpfr(0)
    for c in diff.coeffs:
        comps = (abs(c.v), abs(c.d1), abs(c.d2))[: order + 1]
        for a in comps:
            r = a / scale
            if r > worst:
                worst = r
    return worst


class RatFn:
    """Rational function num/den with Poly parts, kept unreduced.

    No GCD cancellation is ever attempted; identity checks evaluate at
    sample points away from denominator zeros.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        self.num = num if isinstance(num, Poly) else Poly.constant(num)
        if den is None:
            den = Poly.constant(1)
        self.den = den if isinstance(den, Poly) else Poly.constant(den)

    def __add__(self, other):
        if not isinstance(other, RatFn):
            other = RatFn(other)
        return RatFn(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other):
        if not isinstance(other, RatFn):
            other = RatFn(other)
        return RatFn(self.num * other.den - other.num * self.den, self.den * other.den)

    def __neg__(self):
        return RatFn(-self.num, self.den)

    def __mul__(self, other):
        if not isinstance(other, RatFn):
            other = RatFn(other)
        return RatFn(self.num * other.num, self.den * other.den)

    def derivative_x(self):
        return RatFn(
            self.num.derivative_x() * self.den - self.num * self.den.derivative_x(),
            self.den * self.den,
        )

    def derivative_t(self):
        """t-derivative; value and d1 slots of the result are trustworthy."""
        return RatFn(
            self.num.dt_coeffs() * self.den - self.num * self.den.dt_coeffs(),
            self.den * self.den,
        )

    def eval(self, x):
        den = self.den.eval(x)
        if den.v == 0:
            from .errors import SampleAtPoleError

            raise SampleAtPoleError(f"denominator vanished at x={x}")
        return self.num.eval(x) / den


class Mat2:
    """2x2 matrix of rational functions over the Jet2 coefficient ring."""

    __slots__ = ("a",)

    def __init__(self, rows):
        self.a = tuple(tuple(e if isinstance(e, RatFn) else RatFn(e) for e in row) for row in rows)
        if len(self.a) != 2 or any(len(r) != 2 for r in self.a):
            raise ValueError("Mat2 requires a 2x2 array of entries")

    def __getitem__(self, ij):
        i, j = ij
        return self.a[i][j]

    def __add__(self, other):
        return Mat2(
            [[self.a[i][j] + other.a[i][j] for j in range(2)] for i in range(2)]
        )

    def __sub__(self, other):
        return Mat2(
            [[self.a[i][j] - other.a[i][j] for j in range(2)] for i in range(2)]
        )

    def __neg__(self):
        return Mat2([[-self.a[i][j] for j in range(2)] for i in range(2)])

    def __matmul__(self, other):
        out = []
        for i in range(2):
            row = []
            for j in range(2):
                row.append(self.a[i][0] * other.a[0][j] + self.a[i][1] * other.a[1][j])
            out.append(row)
        return Mat2(out)

    def commutator(self, other):
        return (self @ other) - (other @ self)

    def derivative_x(self):
        return Mat2([[self.a[i][j].derivative_x() for j in range(2)] for i in range(2)])

    def derivative_t(self):
        return Mat2([[self.a[i][j].derivative_t() for j in range(2)] for i in range(2)])

    def eval(self, x):
        """Evaluate every entry at x, returning a 2x2 tuple of Jet2."""
        return tuple(tuple(self.a[i][j].eval(x) for j in range(2)) for i in range(2))

    def trace(self):
        return self.a[0][0] + self.a[1][1]

    def det(self):
        return self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]


def mpfr_to_str(x):
    """Full-precision decimal string for an mpfr, round-trippable at equal bits."""
    x = _as_mpfr(x)
    if gmpy2.is_nan(x):
        return "nan"
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    digits, exp, _prec = gmpy2.digits(x, 10, 0)
    sign = ""
    if digits.startswith("-"):
        sign, digits = "-", digits[1:]
    return f"{sign}0.{digits}e{exp}"
