"""Validated-numerics kernel.

Directed rounding is realized by post-multiplying a round-to-nearest result
by ``1 + EPS`` or ``1 - EPS`` with ``EPS = 2**-52``.  Every nonzero result must
stay inside the safe range ``2**-511 <= |x| <= 2**511``.  Logarithmic bounds
use the sentinel ``ZERO_LOG`` to represent the quantity zero.

The elementary bounds ``log_plus``, ``log_minus`` and ``exp_plus`` are built
only from directed +, -, *, / and square roots: repeated square roots (or
halvings) move the argument into a small interval where a truncated Taylor
series with an explicit remainder is rigorous.  All kernels are vectorized
over numpy arrays; the scalar entry points are thin wrappers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

EPS = 2.0**-52
SAFE_MIN = 2.0**-511
SAFE_MAX = 2.0**511
ZERO_LOG = -1.0e4

_UP_FACTOR = 1.0 + EPS
_DOWN_FACTOR = 1.0 - EPS

# truncation orders for the Taylor kernels (see module docstring)
_LOG_SPLIT = 1.01
_EXP_SPLIT = 0.03


class SafeRangeError(ArithmeticError):
    """A directed operation left the safe range."""


class Direction(Enum):
    UP = "up"
    DOWN = "down"


class BoundKind(Enum):
    UPPER = "upper"
    LOWER = "lower"


# ---------------------------------------------------------------------------
# directed rounding primitives
# ---------------------------------------------------------------------------

def _check_safe(x):
    a = np.abs(x)
    bad = (a != 0) & ((a < SAFE_MIN) | (a > SAFE_MAX) | ~np.isfinite(a))
    if np.any(bad):
        raise SafeRangeError("safe-range violation")


def round_up(x):
    """Inflate a round-to-nearest result so it bounds the exact value from above."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, x * _UP_FACTOR, x * _DOWN_FACTOR)


def round_down(x):
    """Deflate a round-to-nearest result so it bounds the exact value from below."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, x * _DOWN_FACTOR, x * _UP_FACTOR)


def _directed(x, up):
    return round_up(x) if up else round_down(x)


def _scalar(x):
    return float(np.asarray(x).reshape(()))


def dir_op(op: str, a: float, b: float, direction: Direction = Direction.UP) -> float:
    """Directed binary operation on binary64 values.

    Parameters
    ----------
    op : {'+', '-', '*', '/'}
    a, b : float
        Operands in the safe range.
    direction : Direction
        ``UP`` returns a value >= a op b, ``DOWN`` a value <= a op b.

    Raises
    ------
    ZeroDivisionError
        For ``op='/'`` with ``b == 0``.
    SafeRangeError
        If an operand or the result leaves the safe range.
    """
    a = float(a)
    b = float(b)
    _check_safe(np.array([a, b]))
    if op == "+":
        r = a + b
    elif op == "-":
        r = a - b
    elif op in ("*", "·"):
        r = a * b
    elif op == "/":
        if b == 0.0:
            raise ZeroDivisionError("directed division by zero")
        r = a / b
    else:
        raise ValueError(f"unknown operation {op!r}")
    out = _scalar(_directed(r, direction is Direction.UP))
    _check_safe(out)
    return out


def sqrt_up(x):
    """Upper bound of the square root (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("square root of a negative number")
    return np.sqrt(x) * _UP_FACTOR


def sqrt_down(x):
    """Lower bound of the square root (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("square root of a negative number")
    return np.sqrt(x) * _DOWN_FACTOR


def iv_sqrt_up(x: float) -> float:
    _check_safe(np.asarray(x, dtype=float))
    return _scalar(sqrt_up(x))


def iv_sqrt_down(x: float) -> float:
    _check_safe(np.asarray(x, dtype=float))
    return _scalar(sqrt_down(x))


# ---------------------------------------------------------------------------
# transcendental bounds
# ---------------------------------------------------------------------------

def _log_series(t, upper):
    """Bound log(1 + t) for 0 <= t <= 0.01 by an alternating Taylor sum.

    Stopping after a positive term gives an upper bound, after a negative
    term a lower bound; nine terms already sit below one ulp of ``t``.
    """
    nterms = 9 if upper else 10
    p_up = t.copy()
    p_dn = t.copy()
    acc = _directed(t, upper)
    for k in range(2, nterms + 1):
        p_up = round_up(p_up * t)
        p_dn = round_down(p_dn * t)
        if k % 2 == 0:
            term = round_down(p_dn / k) if upper else round_up(p_up / k)
            acc = _directed(acc - term, upper)
        else:
            term = round_up(p_up / k) if upper else round_down(p_dn / k)
            acc = _directed(acc + term, upper)
    return np.maximum(acc, 0.0) if not upper else acc


def _log_ge1(x, upper):
    """Directed bound of log x for x >= 1 (array)."""
    xi = x.copy()
    n = np.zeros(x.shape, dtype=float)
    root = sqrt_up if upper else sqrt_down
    while True:
        mask = xi > _LOG_SPLIT
        if not np.any(mask):
            break
        xi = np.where(mask, root(xi), xi)
        n += mask
    xi = np.maximum(xi, 1.0)
    t = xi - 1.0  # exact by Sterbenz
    val = _log_series(t, upper)
    return _directed(val * np.exp2(n), upper)


def log_plus_array(x) -> np.ndarray:
    """Upper bounds of ``log x`` for an array of positive values."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("log_plus needs positive arguments")
    _check_safe(x)
    out = np.empty(x.shape)
    big = x >= 1.0
    if np.any(big):
        out[big] = _log_ge1(x[big], upper=True)
    if np.any(~big):
        # log x = -log(1/x) and 1/x is bounded from below
        inv = np.maximum(round_down(1.0 / x[~big]), 1.0)
        out[~big] = -_log_ge1(inv, upper=False)
    return out


def log_minus_array(x) -> np.ndarray:
    """Lower bounds of ``log x`` for an array of positive values."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("log_minus needs positive arguments")
    _check_safe(x)
    out = np.empty(x.shape)
    big = x >= 1.0
    if np.any(big):
        out[big] = _log_ge1(x[big], upper=False)
    if np.any(~big):
        inv = round_up(1.0 / x[~big])
        out[~big] = -_log_ge1(np.maximum(inv, 1.0), upper=True)
    return out


def log_plus(x: float) -> float:
    """Upper bound of ``log x``.

    Examples
    --------
    >>> log_plus(1.0)
    0.0
    """
    return _scalar(log_plus_array(np.array([x], dtype=float)))


def log_minus(x: float) -> float:
    """Lower bound of ``log x``."""
    return _scalar(log_minus_array(np.array([x], dtype=float)))


def _exp_series(xi, upper):
    """Directed bound of exp(xi) for 0 <= xi <= 0.03.

    Eight Taylor terms leave a tail below ``EPS``; the upper variant adds the
    geometric bound of that tail.
    """
    order = 7
    acc = np.ones(xi.shape)
    p = np.ones(xi.shape)
    fact = 1.0
    for k in range(1, order + 1):
        fact *= k
        p = _directed(p * xi, upper)
        acc = _directed(acc + _directed(p / fact, upper), upper)
    if upper:
        fact *= order + 1
        rem = round_up(round_up(p * xi) / fact)
        rem = round_up(rem / round_down(1.0 - xi))
        acc = round_up(acc + rem)
    return acc


def _exp_nonneg(x, upper):
    """Directed bound of exp(x) for 0 <= x (array), x small enough to stay safe."""
    xi = np.array(x, dtype=float)
    n = np.zeros(xi.shape, dtype=int)
    while True:
        over = xi > _EXP_SPLIT
        if not np.any(over):
            break
        xi = np.where(over, xi * 0.5, xi)
        n = n + over
    val = _exp_series(xi, upper)
    for step in range(int(n.max()) if n.size else 0):
        mask = n > step
        val = np.where(mask, _directed(val * val, upper), val)
    return val


def exp_plus_array(x) -> np.ndarray:
    """Upper bounds of ``exp x`` for an array with entries in [0, 1]."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("exp_plus is defined on [0, 1]")
    return _exp_nonneg(x, upper=True)


def exp_plus(x: float) -> float:
    """Upper bound of ``exp x`` for ``0 <= x <= 1``."""
    return _scalar(exp_plus_array(np.array([x], dtype=float)))


# beyond this the exponential of a negative argument is below every ulp of 1
_NEG_EXP_CUT = 60.0


def _exp_neg_up(d):
    """Upper bound of exp(d) for d <= 0 (array)."""
    y = np.minimum(-d, _NEG_EXP_CUT)
    lower = _exp_nonneg(y, upper=False)
    return round_up(1.0 / lower)


def log_add_upper_array(lx, ly) -> np.ndarray:
    """Elementwise upper bound of ``log(e**lx + e**ly)``.

    Entries at or below ``ZERO_LOG`` represent zero and are absorbed exactly.
    """
    lx = np.asarray(lx, dtype=float)
    ly = np.asarray(ly, dtype=float)
    hi = np.maximum(lx, ly)
    lo = np.minimum(lx, ly)
    zero_lo = lo <= ZERO_LOG
    d = np.where(zero_lo, 0.0, round_up(lo - hi))
    e = _exp_neg_up(np.minimum(d, 0.0))
    s = round_up(1.0 + e)
    out = round_up(hi + log_plus_array(s))
    out = np.where(zero_lo, hi, out)
    return out


def log_add_upper(lx: "LogBound | float", ly: "LogBound | float") -> "LogBound":
    """Upper bound of ``log(x + y)`` from upper bounds of ``log x`` and ``log y``.

    Examples
    --------
    >>> log_add_upper(0.0, ZERO_LOG).logval
    0.0
    """
    a = _as_upper(lx)
    b = _as_upper(ly)
    v = _scalar(log_add_upper_array(np.array([a]), np.array([b])))
    return LogBound(v, BoundKind.UPPER)


def log_sum_upper(values) -> float:
    """Upper bound of ``log(sum(exp(v)))``; entries at ``ZERO_LOG`` count as zero."""
    v = np.asarray(values, dtype=float).ravel()
    v = v[v > ZERO_LOG]
    if v.size == 0:
        return ZERO_LOG
    top = float(v.max())
    e = _exp_neg_up(np.minimum(round_up(v - top), 0.0))
    total = float(np.sum(e)) * (1.0 + (v.size + 2) * EPS)
    return _scalar(round_up(top + log_plus_array(np.array([total]))))


def _as_upper(v):
    if isinstance(v, LogBound):
        if v.kind is not BoundKind.UPPER:
            raise ValueError("log_add_upper needs UPPER bounds")
        return v.logval
    return float(v)


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogBound:
    """Bound ``exp(logval)`` on a nonnegative quantity."""

    logval: float
    kind: BoundKind = BoundKind.UPPER

    def __post_init__(self):
        v = float(self.logval)
        if math.isnan(v):
            raise ValueError("NaN log bound")
        if v < ZERO_LOG:
            v = ZERO_LOG
        object.__setattr__(self, "logval", v)

    @classmethod
    def zero(cls, kind: BoundKind = BoundKind.UPPER) -> "LogBound":
        return cls(ZERO_LOG, kind)

    @property
    def is_zero(self) -> bool:
        return self.logval <= ZERO_LOG

    def log10(self) -> float:
        return self.logval / math.log(10.0)

    def __float__(self):
        return self.logval


@dataclass(frozen=True)
class Interval:
    """Closed real interval ``[lo, hi]`` with directed-rounded arithmetic."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not lo <= hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def from_value(cls, x) -> "Interval":
        """Enclose an exact value given as int, float, Fraction or string."""
        from fractions import Fraction

        if isinstance(x, Interval):
            return x
        if isinstance(x, float):
            return cls(x, x)
        q = Fraction(x)
        f = float(q)
        lo = f if Fraction(f) <= q else float(np.nextafter(f, -np.inf))
        hi = f if Fraction(f) >= q else float(np.nextafter(f, np.inf))
        return cls(lo, hi)

    @property
    def mid(self) -> float:
        return 0.5 * self.lo + 0.5 * self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        from fractions import Fraction

        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, Fraction):
            return Fraction(self.lo) <= x <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __add__(self, other):
        other = _iv(other)
        return Interval(_dn(self.lo + other.lo), _up(self.hi + other.hi))

    __radd__ = __add__

    def __sub__(self, other):
        other = _iv(other)
        return Interval(_dn(self.lo - other.hi), _up(self.hi - other.lo))

    def __rsub__(self, other):
        return _iv(other) - self

    def __mul__(self, other):
        other = _iv(other)
        ops = [(self.lo, other.lo), (self.lo, other.hi), (self.hi, other.lo), (self.hi, other.hi)]
        return Interval(*_bounds([a * b for a, b in ops], ops))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _iv(other)
        if other.lo <= 0.0 <= other.hi:
            raise ZeroDivisionError("division by interval containing zero")
        ops = [(self.lo, other.lo), (self.lo, other.hi), (self.hi, other.lo), (self.hi, other.hi)]
        return Interval(*_bounds([a / b for a, b in ops], ops))

    def __rtruediv__(self, other):
        return _iv(other) / self

    def sqrt(self) -> "Interval":
        if self.lo < 0:
            raise ValueError("square root of an interval with negative part")
        return Interval(_scalar(sqrt_down(self.lo)), _scalar(sqrt_up(self.hi)))

    def abs(self) -> "Interval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0.0, self.mag)

    def square(self) -> "Interval":
        a = self.abs()
        return Interval(*_bounds([a.lo * a.lo, a.hi * a.hi], [(a.lo, a.lo), (a.hi, a.hi)]))

    def hull(self, other) -> "Interval":
        other = _iv(other)
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def _up(x: float) -> float:
    # below the safe range the rounding error is absolute, at most half a subnormal ulp
    if x != 0.0 and abs(x) < SAFE_MIN:
        return math.nextafter(x, math.inf)
    return x * _UP_FACTOR if x > 0 else x * _DOWN_FACTOR


def _dn(x: float) -> float:
    if x != 0.0 and abs(x) < SAFE_MIN:
        return math.nextafter(x, -math.inf)
    return x * _DOWN_FACTOR if x > 0 else x * _UP_FACTOR


_TINY = 5e-324


def _bounds(results, operands):
    """Directed hull of products or quotients, widening any that underflowed to zero."""
    lo, hi = math.inf, -math.inf
    for v, (a, b) in zip(results, operands):
        if v == 0.0 and a != 0.0 and b != 0.0 and not math.isinf(b):
            pos = (a > 0) == (b > 0)
            lo = min(lo, 0.0 if pos else -_TINY)
            hi = max(hi, _TINY if pos else 0.0)
        else:
            lo = min(lo, _dn(v))
            hi = max(hi, _up(v))
    return lo, hi


def _iv(x) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval.from_value(x)


def iv_arith(op: str, a: Interval, b: Interval) -> Interval:
    """Interval operation ``a op b`` with outward rounding."""
    a, b = _iv(a), _iv(b)
    if op == "+":
        out = a + b
    elif op == "-":
        out = a - b
    elif op in ("*", "·"):
        out = a * b
    elif op == "/":
        out = a / b
    else:
        raise ValueError(f"unknown operation {op!r}")
    _check_safe(np.array([out.lo, out.hi]))
    return out


@dataclass(frozen=True)
class ComplexInterval:
    """Rectangular complex enclosure ``re + i im``."""

    re: Interval
    im: Interval

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexInterval":
        z = complex(z)
        return cls(Interval.point(z.real), Interval.point(z.imag))

    @classmethod
    def zero(cls) -> "ComplexInterval":
        return cls(Interval.point(0.0), Interval.point(0.0))

    @property
    def mid(self) -> complex:
        return complex(self.re.mid, self.im.mid)

    @property
    def is_exact_zero(self) -> bool:
        return self.re.lo == self.re.hi == 0.0 and self.im.lo == self.im.hi == 0.0

    def contains(self, z) -> bool:
        if isinstance(z, ComplexInterval):
            return self.re.contains(z.re) and self.im.contains(z.im)
        if isinstance(z, tuple):
            return self.re.contains(z[0]) and self.im.contains(z[1])
        z = complex(z)
        return self.re.contains(z.real) and self.im.contains(z.imag)

    def __neg__(self):
        return ComplexInterval(-self.re, -self.im)

    def __add__(self, other):
        other = _civ(other)
        return ComplexInterval(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _civ(other)
        return ComplexInterval(self.re - other.re, self.im - other.im)

    def __mul__(self, other):
        other = _civ(other)
        re = self.re * other.re - self.im * other.im
        im = self.re * other.im + self.im * other.re
        return ComplexInterval(re, im)

    __rmul__ = __mul__

    def times_i(self) -> "ComplexInterval":
        return ComplexInterval(-self.im, self.re)

    def scale(self, s: Interval) -> "ComplexInterval":
        return ComplexInterval(self.re * s, self.im * s)

    def abs_upper(self) -> float:
        """Upper bound of the modulus."""
        r = self.re.mag
        i = self.im.mag
        return _scalar(sqrt_up(_up(_up(r * r) + _up(i * i))))

    def __repr__(self):
        return f"ComplexInterval({self.re!r}, {self.im!r})"


def _civ(x) -> ComplexInterval:
    if isinstance(x, ComplexInterval):
        return x
    if isinstance(x, Interval):
        return ComplexInterval(x, Interval.point(0.0))
    return ComplexInterval.from_complex(x)


# ---------------------------------------------------------------------------
# hex serialization
# ---------------------------------------------------------------------------

def to_hex(x: float) -> str:
    """Bit-exact text form of a binary64 value."""
    return float(x).hex()


def from_hex(s: str) -> float:
    return float.fromhex(s.strip())
