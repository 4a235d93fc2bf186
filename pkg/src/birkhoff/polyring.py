"""Homogeneous polynomials in the complex canonical variables.

A monomial is ``P**l * Q**lt`` with ``P_j = -i z_j`` and ``Q_j = conj(z_j)``;
the pair ``(l, lt)`` of exponent vectors is stored as one row of length
``2n``.  Coefficients are rectangular complex intervals held as four endpoint
arrays over the full monomial basis of the degree (lexicographic order), so a
polynomial is a dense vector and arithmetic is vectorized with numpy.

Products are evaluated in midpoint-radius form: midpoints with ordinary
binary64 arithmetic, radii that collect the input radii plus a first-order
bound ``(m + 8) * EPS * sum|terms|`` of the rounding error of an ``m``-term
accumulation.  The result is converted back to directed endpoints.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .rigor import (
    EPS,
    ComplexInterval,
    Interval,
    LogBound,
    log_plus,
    round_down,
    round_up,
)

_KEY_BASE = 256
_TINY = 2.0**-1060
# pair-count per vectorized block in products
_BLOCK = 1 << 21


# ---------------------------------------------------------------------------
# monomial bases
# ---------------------------------------------------------------------------

class Basis:
    """All exponent rows of total degree ``degree`` in ``2n`` variables."""

    def __init__(self, n: int, degree: int):
        if degree >= _KEY_BASE:
            raise ValueError("degree too large for the key encoding")
        self.n = n
        self.degree = degree
        rows = list(_compositions(degree, 2 * n))
        self.exps = np.array(rows, dtype=np.int64).reshape(len(rows), 2 * n)
        self.keys = encode(self.exps)
        self.size = len(rows)
        # max_j max(l_j, lt_j), used by the derivative bound
        if self.size:
            self.maxexp = np.maximum(self.exps[:, :n], self.exps[:, n:]).max(axis=1)
            self.resonance = self.exps[:, :n] - self.exps[:, n:]
        else:
            self.maxexp = np.zeros(0, dtype=np.int64)
            self.resonance = np.zeros((0, n), dtype=np.int64)

    def index(self, keys: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.keys, keys)
        return idx

    def index_of(self, l: Iterable[int], lt: Iterable[int]) -> int:
        row = np.array(list(l) + list(lt), dtype=np.int64)
        if row.size != 2 * self.n or row.sum() != self.degree or np.any(row < 0):
            raise KeyError((tuple(l), tuple(lt)))
        k = encode(row[None, :])[0]
        i = int(np.searchsorted(self.keys, k))
        return i


def _compositions(total: int, parts: int):
    """Exponent tuples summing to ``total`` in decreasing lexicographic order reversed."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def encode(exps: np.ndarray) -> np.ndarray:
    """Integer key of exponent rows; key order equals lexicographic order."""
    exps = np.asarray(exps, dtype=np.int64)
    m = exps.shape[1]
    weights = _KEY_BASE ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return exps @ weights


@lru_cache(maxsize=None)
def basis(n: int, degree: int) -> Basis:
    return Basis(n, degree)


# ---------------------------------------------------------------------------
# midpoint-radius helpers
# ---------------------------------------------------------------------------

def _to_midrad(lo, hi):
    mid = 0.5 * lo + 0.5 * hi
    rad = round_up(np.maximum(hi - mid, mid - lo))
    return mid, rad


def _to_endpoints(mid, rad):
    lo = round_down(mid - rad)
    hi = round_up(mid + rad)
    exact = rad == 0.0
    lo = np.where(exact, mid, lo)
    hi = np.where(exact, mid, hi)
    return lo, hi


def _finish(mid_re, mid_im, rad_re, rad_im, s_re, s_im, count):
    """Turn accumulated sums into rigorous endpoints."""
    g = (count + 8.0) * EPS
    rr = (rad_re + g * s_re) * (1.0 + g) + count * _TINY
    ri = (rad_im + g * s_im) * (1.0 + g) + count * _TINY
    rr = np.where(count == 0, 0.0, rr)
    ri = np.where(count == 0, 0.0, ri)
    re_lo, re_hi = _to_endpoints(mid_re, rr)
    im_lo, im_hi = _to_endpoints(mid_im, ri)
    return re_lo, re_hi, im_lo, im_hi


# ---------------------------------------------------------------------------
# polynomial type
# ---------------------------------------------------------------------------

class HomoPoly:
    """Homogeneous polynomial with complex interval coefficients.

    Parameters
    ----------
    n : int
        Degrees of freedom.
    degree : int
        Total degree.
    re_lo, re_hi, im_lo, im_hi : ndarray, optional
        Endpoint arrays over ``basis(n, degree)``; zeros when omitted.
    """

    __slots__ = ("n", "degree", "re_lo", "re_hi", "im_lo", "im_hi")

    def __init__(self, n: int, degree: int, re_lo=None, re_hi=None, im_lo=None, im_hi=None):
        self.n = int(n)
        self.degree = int(degree)
        size = basis(self.n, self.degree).size
        z = np.zeros(size)
        self.re_lo = z.copy() if re_lo is None else np.asarray(re_lo, dtype=float)
        self.re_hi = z.copy() if re_hi is None else np.asarray(re_hi, dtype=float)
        self.im_lo = z.copy() if im_lo is None else np.asarray(im_lo, dtype=float)
        self.im_hi = z.copy() if im_hi is None else np.asarray(im_hi, dtype=float)
        for a in (self.re_lo, self.re_hi, self.im_lo, self.im_hi):
            a.flags.writeable = False
            if a.shape != (size,):
                raise ValueError("coefficient array does not match the basis")

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, n: int, degree: int) -> "HomoPoly":
        return cls(n, degree)

    @classmethod
    def from_terms(cls, n: int, degree: int, terms: Mapping) -> "HomoPoly":
        """Build from ``{(l, lt): value}`` with complex or ComplexInterval values."""
        b = basis(n, degree)
        arr = [np.zeros(b.size) for _ in range(4)]
        for (l, lt), v in terms.items():
            i = b.index_of(l, lt)
            if isinstance(v, ComplexInterval):
                c = v
            elif isinstance(v, Interval):
                c = ComplexInterval(v, Interval.point(0.0))
            else:
                c = ComplexInterval.from_complex(v)
            arr[0][i], arr[1][i] = c.re.lo, c.re.hi
            arr[2][i], arr[3][i] = c.im.lo, c.im.hi
        return cls(n, degree, *arr)

    # -- inspection -------------------------------------------------------

    @property
    def basis(self) -> Basis:
        return basis(self.n, self.degree)

    def nonzero_mask(self) -> np.ndarray:
        return (self.re_lo != 0) | (self.re_hi != 0) | (self.im_lo != 0) | (self.im_hi != 0)

    @property
    def nnz(self) -> int:
        return int(self.nonzero_mask().sum())

    @property
    def is_zero(self) -> bool:
        return self.nnz == 0

    @property
    def coeffs(self) -> dict:
        """Sparse view ``{(l, lt): ComplexInterval}`` without exact zeros."""
        b = self.basis
        out = {}
        for i in np.flatnonzero(self.nonzero_mask()):
            row = b.exps[i]
            key = (tuple(int(x) for x in row[: self.n]), tuple(int(x) for x in row[self.n:]))
            out[key] = self._civ(i)
        return out

    def _civ(self, i: int) -> ComplexInterval:
        return ComplexInterval(
            Interval(self.re_lo[i], self.re_hi[i]), Interval(self.im_lo[i], self.im_hi[i])
        )

    def coeff(self, l, lt) -> ComplexInterval:
        return self._civ(self.basis.index_of(l, lt))

    def midpoints(self) -> np.ndarray:
        return (0.5 * self.re_lo + 0.5 * self.re_hi) + 1j * (0.5 * self.im_lo + 0.5 * self.im_hi)

    def max_width(self) -> float:
        if self.basis.size == 0:
            return 0.0
        return float(max((self.re_hi - self.re_lo).max(), (self.im_hi - self.im_lo).max()))

    def _midrad(self):
        mr, rr = _to_midrad(self.re_lo, self.re_hi)
        mi, ri = _to_midrad(self.im_lo, self.im_hi)
        return mr, mi, rr, ri

    def __repr__(self):
        return f"HomoPoly(n={self.n}, degree={self.degree}, nnz={self.nnz})"

    def __eq__(self, other):
        if not isinstance(other, HomoPoly):
            return NotImplemented
        return (
            self.n == other.n
            and self.degree == other.degree
            and all(
                np.array_equal(a, b)
                for a, b in zip(self._arrays(), other._arrays())
            )
        )

    __hash__ = None

    def _arrays(self):
        return (self.re_lo, self.re_hi, self.im_lo, self.im_hi)

    # -- linear operations ------------------------------------------------

    def _check(self, other: "HomoPoly"):
        if self.n != other.n:
            raise ValueError("polynomials with different numbers of degrees of freedom")
        if self.degree != other.degree:
            raise ValueError("polynomials of different degrees")

    def __neg__(self):
        return HomoPoly(self.n, self.degree, -self.re_hi, -self.re_lo, -self.im_hi, -self.im_lo)

    def __add__(self, other: "HomoPoly") -> "HomoPoly":
        self._check(other)
        return HomoPoly(
            self.n,
            self.degree,
            _add_lo(self.re_lo, other.re_lo),
            _add_hi(self.re_hi, other.re_hi),
            _add_lo(self.im_lo, other.im_lo),
            _add_hi(self.im_hi, other.im_hi),
        )

    def __sub__(self, other: "HomoPoly") -> "HomoPoly":
        return self + (-other)

    def scale(self, c) -> "HomoPoly":
        """Multiply by a complex number, Interval or ComplexInterval."""
        if isinstance(c, Interval):
            c = ComplexInterval(c, Interval.point(0.0))
        elif not isinstance(c, ComplexInterval):
            c = ComplexInterval.from_complex(c)
        cr_m, cr_r = _to_midrad(np.array(c.re.lo), np.array(c.re.hi))
        ci_m, ci_r = _to_midrad(np.array(c.im.lo), np.array(c.im.hi))
        return self._mul_elementwise(cr_m, ci_m, cr_r, ci_r)

    def scale_elementwise(self, re_lo, re_hi, im_lo, im_hi) -> "HomoPoly":
        """Multiply coefficient ``k`` by the interval ``[re_lo+i im_lo, re_hi+i im_hi][k]``."""
        cr_m, cr_r = _to_midrad(np.asarray(re_lo, float), np.asarray(re_hi, float))
        ci_m, ci_r = _to_midrad(np.asarray(im_lo, float), np.asarray(im_hi, float))
        return self._mul_elementwise(cr_m, ci_m, cr_r, ci_r)

    def _mul_elementwise(self, cm_re, cm_im, cr_re, cr_im) -> "HomoPoly":
        a, b, ar, br = self._midrad()
        A, B = np.abs(a), np.abs(b)
        C, D = np.abs(cm_re), np.abs(cm_im)
        mid_re = a * cm_re - b * cm_im
        mid_im = a * cm_im + b * cm_re
        s_re = A * C + B * D
        s_im = A * D + B * C
        r_re = A * cr_re + ar * C + ar * cr_re + B * cr_im + br * D + br * cr_im
        r_im = A * cr_im + ar * D + ar * cr_im + B * cr_re + br * C + br * cr_re
        nz = self.nonzero_mask().astype(float)
        count = nz * 2.0
        out = _finish(mid_re, mid_im, r_re, r_im, s_re, s_im, count)
        return HomoPoly(self.n, self.degree, *(np.where(nz > 0, o, 0.0) for o in out))

    def div_int(self, k: int) -> "HomoPoly":
        """Divide by a positive integer."""
        if k == 1:
            return self
        q = Interval.from_value(1) / Interval.point(float(k))
        return self.scale(q)

    # -- norms --------------------------------------------------------------

    def abs_upper(self) -> np.ndarray:
        """Per-coefficient upper bounds of the modulus."""
        re = np.maximum(np.abs(self.re_lo), np.abs(self.re_hi))
        im = np.maximum(np.abs(self.im_lo), np.abs(self.im_hi))
        return round_up(np.sqrt(round_up(round_up(re * re) + round_up(im * im))))

    def abs_lower(self) -> np.ndarray:
        """Per-coefficient lower bounds of the modulus."""
        re = np.where((self.re_lo <= 0) & (self.re_hi >= 0), 0.0,
                      np.minimum(np.abs(self.re_lo), np.abs(self.re_hi)))
        im = np.where((self.im_lo <= 0) & (self.im_hi >= 0), 0.0,
                      np.minimum(np.abs(self.im_lo), np.abs(self.im_hi)))
        return round_down(np.sqrt(round_down(round_down(re * re) + round_down(im * im))))

    def norm(self) -> Interval:
        """Enclosure of the sum of coefficient moduli."""
        return _sum_interval(self.abs_lower(), self.abs_upper())

    def d_r(self) -> Interval:
        """Enclosure of ``sum |c| * max_j max(l_j, lt_j)``, the Lie-derivative constant."""
        w = self.basis.maxexp.astype(float)
        return _sum_interval(self.abs_lower() * w, self.abs_upper() * w)

    def sup_norm_bound(self, rho: float) -> LogBound:
        """Upper bound of ``log(rho**degree * norm)``."""
        return sup_norm_bound(self, rho)

    # -- evaluation (testing aid) ---------------------------------------------

    def evaluate(self, P, Q) -> complex:
        """Evaluate the midpoint polynomial at complex points ``P``, ``Q``."""
        b = self.basis
        P = np.asarray(P, dtype=complex)
        Q = np.asarray(Q, dtype=complex)
        mono = np.prod(P[None, :] ** b.exps[:, : self.n], axis=1) * np.prod(
            Q[None, :] ** b.exps[:, self.n:], axis=1
        )
        return complex(np.sum(self.midpoints() * mono))

    # -- text fixtures --------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"# n={self.n} degree={self.degree}"]
        for (l, lt), c in self.coeffs.items():
            lines.append(
                " ".join(
                    [
                        ",".join(map(str, l)),
                        ",".join(map(str, lt)),
                        c.re.lo.hex(),
                        c.re.hi.hex(),
                        c.im.lo.hex(),
                        c.im.hi.hex(),
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "HomoPoly":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ValueError("line 1: missing polynomial header")
        head = dict(tok.split("=") for tok in lines[0][1:].split())
        n, degree = int(head["n"]), int(head["degree"])
        terms = {}
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"line {lineno}: expected 6 fields, got {len(parts)}")
            try:
                l = tuple(int(x) for x in parts[0].split(","))
                lt = tuple(int(x) for x in parts[1].split(","))
                vals = [float.fromhex(p) for p in parts[2:]]
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            terms[(l, lt)] = ComplexInterval(Interval(vals[0], vals[1]), Interval(vals[2], vals[3]))
        return cls.from_terms(n, degree, terms)


def _add_lo(a, b):
    s = a + b
    return np.where((a == 0) | (b == 0), s, round_down(s))


def _add_hi(a, b):
    s = a + b
    return np.where((a == 0) | (b == 0), s, round_up(s))


def _sum_interval(lo_terms, hi_terms) -> Interval:
    m = lo_terms.size
    g = (m + 2) * EPS
    hi = float(np.sum(hi_terms)) * (1.0 + g)
    lo = float(np.sum(lo_terms)) * (1.0 - g)
    return Interval(max(lo, 0.0), hi)


def sup_norm_bound(f: HomoPoly, rho: float) -> LogBound:
    """Upper bound of ``log(rho**s * ||f||)`` for ``f`` homogeneous of degree ``s``."""
    nrm = f.norm().hi
    if nrm == 0.0:
        return LogBound.zero()
    v = log_plus(nrm) + f.degree * log_plus(rho)
    return LogBound(float(round_up(v)))


# ---------------------------------------------------------------------------
# Poisson bracket and Lie series
# ---------------------------------------------------------------------------

def poisson(f: HomoPoly, g: HomoPoly) -> HomoPoly:
    """Poisson bracket ``sum_j dF/dP_j dG/dQ_j - dF/dQ_j dG/dP_j``.

    With ``Z0 = sum_j i w_j P_j Q_j`` this gives
    ``{P**l Q**lt, Z0} = i w.(l - lt) P**l Q**lt``.
    """
    if f.n != g.n:
        raise ValueError("polynomials with different numbers of degrees of freedom")
    n = f.n
    out_deg = f.degree + g.degree - 2
    if out_deg < 0:
        return HomoPoly.zero(n, 0)
    bt = basis(n, out_deg)
    fi = np.flatnonzero(f.nonzero_mask())
    gi = np.flatnonzero(g.nonzero_mask())
    if fi.size == 0 or gi.size == 0 or bt.size == 0:
        return HomoPoly.zero(n, out_deg)

    fe = f.basis.exps[fi]
    ge = g.basis.exps[gi]
    fk = f.basis.keys[fi]
    gk = g.basis.keys[gi]
    fa, fb, far, fbr = (x[fi] for x in f._midrad())
    ga, gb, gar, gbr = (x[gi] for x in g._midrad())
    fA, fB, gA, gB = np.abs(fa), np.abs(fb), np.abs(ga), np.abs(gb)

    size = bt.size
    acc = [np.zeros(size) for _ in range(7)]
    rows_per_block = max(1, _BLOCK // gi.size)
    unit_keys = [encode(_unit_pair(n, j)[None, :])[0] for j in range(n)]

    for j in range(n):
        # weight of the pair (f-term, g-term) for the j-th pair of variables
        for start in range(0, fi.size, rows_per_block):
            sl = slice(start, start + rows_per_block)
            W = np.outer(fe[sl, j], ge[:, n + j]) - np.outer(fe[sl, n + j], ge[:, j])
            nzr, nzc = np.nonzero(W)
            if nzr.size == 0:
                continue
            w = W[nzr, nzc].astype(float)
            r = nzr + start
            c = nzc
            idx = bt.index(fk[r] + gk[c] - unit_keys[j])
            aw = np.abs(w)
            a, b, A, B = fa[r], fb[r], fA[r], fB[r]
            ar, br = far[r], fbr[r]
            cc, d, C, D = ga[c], gb[c], gA[c], gB[c]
            cr, dr = gar[c], gbr[c]
            contrib = (
                w * (a * cc - b * d),
                w * (a * d + b * cc),
                aw * (A * cr + ar * C + ar * cr + B * dr + br * D + br * dr),
                aw * (A * dr + ar * D + ar * dr + B * cr + br * C + br * cr),
                aw * (A * C + B * D),
                aw * (A * D + B * C),
            )
            for k, v in enumerate(contrib):
                acc[k] += np.bincount(idx, weights=v, minlength=size)
            acc[6] += np.bincount(idx, minlength=size)

    # two extra roundings per pair: the product and the weight
    out = _finish(acc[0], acc[1], acc[2], acc[3], acc[4], acc[5], acc[6] + 4.0 * (acc[6] > 0))
    return HomoPoly(n, out_deg, *out)


def _unit_pair(n: int, j: int) -> np.ndarray:
    e = np.zeros(2 * n, dtype=np.int64)
    e[j] = 1
    e[n + j] = 1
    return e


def lie_derivative(chi: HomoPoly, g: HomoPoly) -> HomoPoly:
    """``L_chi g = {chi, g}``."""
    return poisson(chi, g)


def lie_apply(chi: HomoPoly, g: HomoPoly, max_degree: int) -> list:
    """Terms ``L_chi**j g / j!`` of the Lie series up to ``max_degree``.

    Returns
    -------
    list of HomoPoly
        Entry ``j`` has degree ``g.degree + j * (chi.degree - 2)``.
    """
    r = chi.degree - 2
    if r < 1:
        raise ValueError("generating function must have degree >= 3")
    if max_degree < g.degree:
        return []
    terms = [g]
    cur = g
    j = 1
    while g.degree + j * r <= max_degree:
        if cur.is_zero or chi.is_zero:
            cur = HomoPoly.zero(g.n, g.degree + j * r)
        else:
            cur = poisson(chi, cur).div_int(j)
        terms.append(cur)
        j += 1
    return terms


def product(f: HomoPoly, g: HomoPoly) -> HomoPoly:
    """Ordinary product of two homogeneous polynomials."""
    if f.n != g.n:
        raise ValueError("polynomials with different numbers of degrees of freedom")
    n = f.n
    bt = basis(n, f.degree + g.degree)
    fi = np.flatnonzero(f.nonzero_mask())
    gi = np.flatnonzero(g.nonzero_mask())
    size = bt.size
    if fi.size == 0 or gi.size == 0:
        return HomoPoly.zero(n, f.degree + g.degree)
    fa, fb, far, fbr = (x[fi] for x in f._midrad())
    ga, gb, gar, gbr = (x[gi] for x in g._midrad())
    r, c = np.meshgrid(np.arange(fi.size), np.arange(gi.size), indexing="ij")
    r, c = r.ravel(), c.ravel()
    idx = bt.index(f.basis.keys[fi][r] + g.basis.keys[gi][c])
    a, b, ar, br = fa[r], fb[r], far[r], fbr[r]
    cc, d, cr, dr = ga[c], gb[c], gar[c], gbr[c]
    A, B, C, D = np.abs(a), np.abs(b), np.abs(cc), np.abs(d)
    sums = [
        np.bincount(idx, weights=v, minlength=size)
        for v in (
            a * cc - b * d,
            a * d + b * cc,
            A * cr + ar * C + ar * cr + B * dr + br * D + br * dr,
            A * dr + ar * D + ar * dr + B * cr + br * C + br * cr,
            A * C + B * D,
            A * D + B * C,
        )
    ]
    count = np.bincount(idx, minlength=size).astype(float)
    out = _finish(*sums, count + 2.0 * (count > 0))
    return HomoPoly(n, f.degree + g.degree, *out)


def from_midpoints(n: int, degree: int, values: np.ndarray) -> HomoPoly:
    """Point-interval polynomial from a dense complex vector."""
    values = np.asarray(values, dtype=complex)
    return HomoPoly(n, degree, values.real, values.real, values.imag, values.imag)


def action_monomial(n: int, j: int) -> HomoPoly:
    """The action ``I_j = z_j conj(z_j) = i P_j Q_j``."""
    e_l = [0] * n
    e_l[j] = 1
    return HomoPoly.from_terms(n, 2, {(tuple(e_l), tuple(e_l)): 1j})
