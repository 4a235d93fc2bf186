"""Initial Hamiltonians: Hénon–Heiles and the planar restricted three-body problem.

Both models are returned as :class:`~birkhoff.normalform.HamiltonianState`
objects in the complex variables ``P = -i z``, ``Q = conj(z)`` with
``z = (x + i y) / sqrt(2)``, so that ``x = (i P + Q) / sqrt(2)`` and
``y = (P + i Q) / sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .normalform import Frequencies, HamiltonianState, ResonanceMode
from .polyring import HomoPoly, product
from .rigor import (
    SAFE_MIN,
    ZERO_LOG,
    ComplexInterval,
    Interval,
    log_plus,
    log_plus_array,
    round_up,
)

MU_PRESETS = {
    "jupiter": "9.54e-4",
    "uranus": "4.36e-5",
    "mars": "3.21e-7",
    "janus": "3.36e-9",
}

# orbital periods in years, used to express the residual solar lifetime in revolutions
PERIOD_YEARS = {
    "jupiter": 11.862,
    "uranus": 84.02,
    "mars": 1.8809,
    "janus": 0.6945 / 365.25,
}

ELT_YEARS = 6.0e9


def _zero_iv() -> Interval:
    return Interval.point(0.0)


def _inv_sqrt2() -> Interval:
    return Interval.point(1.0) / Interval.point(2.0).sqrt()


def linear_forms(n: int):
    """Real coordinates as degree-one polynomials in the complex variables.

    Returns
    -------
    xs, ys : list of HomoPoly
    """
    s = _inv_sqrt2()
    zero = _zero_iv()
    xs, ys = [], []
    for j in range(n):
        e = [0] * n
        e[j] = 1
        e = tuple(e)
        z0 = (0,) * n
        xs.append(
            HomoPoly.from_terms(
                n, 1, {(e, z0): ComplexInterval(zero, s), (z0, e): ComplexInterval(s, zero)}
            )
        )
        ys.append(
            HomoPoly.from_terms(
                n, 1, {(e, z0): ComplexInterval(s, zero), (z0, e): ComplexInterval(zero, s)}
            )
        )
    return xs, ys


# ---------------------------------------------------------------------------
# Hénon–Heiles
# ---------------------------------------------------------------------------

_NAMED_FREQUENCIES = {
    "golden": lambda: (Interval.point(5.0).sqrt() - 1) / 2,
    "-golden": lambda: -(Interval.point(5.0).sqrt() - 1) / 2,
    "sqrt2/2": lambda: Interval.point(2.0).sqrt() / 2,
    "-sqrt2/2": lambda: -(Interval.point(2.0).sqrt() / 2),
}


def frequency(value):
    """Frequency from a number, a fraction string or a named irrational.

    Names are ``golden`` for ``(sqrt(5) - 1)/2`` and ``sqrt2/2``, each with an
    optional leading minus.  Non-string values are returned unchanged.
    """
    if not isinstance(value, str):
        return value
    t = value.strip().lower().replace(" ", "")
    if t in _NAMED_FREQUENCIES:
        return _NAMED_FREQUENCIES[t]()
    try:
        return Fraction(t)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"cannot read frequency {value!r}") from None


def henon_heiles(
    omega1=1.0,
    omega2=None,
    R_I: int = 2,
    R_II: int = 5,
    logE: float = 0.0,
    log_a0: Optional[float] = None,
) -> HamiltonianState:
    """Initial state for ``sum w_j (x_j**2 + y_j**2)/2 + x1**2 x2 - x2**3/3``.

    Parameters
    ----------
    omega1, omega2 : float, str, Fraction or Interval
        Frequencies; strings (see :func:`frequency`) and fractions are
        enclosed exactly.  ``omega2``
        defaults to ``-(sqrt(5) - 1)/2``.
    R_I, R_II : int
        Explicit and majorant horizons.
    logE, log_a0 : float
        Tail parameters; ``log_a0`` defaults to ``log ||f_1|| / 3``.
    """
    if omega2 is None:
        omega2 = "-golden"
    omega = Frequencies((frequency(omega1), frequency(omega2)))
    xs, ys = linear_forms(2)
    x1, x2 = xs
    cube = product(product(x1, x1), x2)
    third = Interval.point(1.0) / Interval.point(3.0)
    f1 = cube - product(product(x2, x2), x2).scale(third)
    if log_a0 is None:
        nrm = f1.norm().hi
        log_a0 = float(round_up(log_plus(nrm) / 3.0))
    return HamiltonianState.initial(omega, {1: f1}, R_I, R_II, logE, log_a0)


# ---------------------------------------------------------------------------
# restricted three-body problem
# ---------------------------------------------------------------------------

ROUTH_MU = (9.0 - math.sqrt(69.0)) / 18.0


def _mu_interval(mu) -> Interval:
    if isinstance(mu, str) and mu.lower() in MU_PRESETS:
        mu = MU_PRESETS[mu.lower()]
    if isinstance(mu, str):
        mu = Fraction(mu)
    return Interval.from_value(mu)


def _routh_interval() -> Interval:
    return (Interval.point(9.0) - Interval.point(69.0).sqrt()) / 18


def cprtbp_frequencies(mu):
    """Enclosures of ``nu_1 > 0`` and ``nu_2 < 0`` at the triangular points.

    Raises
    ------
    ValueError
        If ``mu`` is not below the Routh critical value.
    """
    m = _mu_interval(mu)
    if not (m.lo > 0 and m.hi < _routh_interval().lo):
        raise ValueError("mu must lie in (0, (9 - sqrt(69))/18)")
    disc = 27 * m.square() - 27 * m + 1
    if disc.lo <= 0:
        raise ValueError("mu too close to the Routh critical value")
    root = disc.sqrt()
    nu1 = ((1 + root) / 2).sqrt()
    # 1 - root rewritten to avoid cancellation for small mu
    inner = 27 * m * (1 - m) / (2 * (1 + root))
    if inner.lo <= 0:
        raise ValueError("mu too close to zero for an enclosure of nu_2")
    nu2 = -inner.sqrt()
    return nu1, nu2


# -- small interval linear algebra ---------------------------------------------

def _civ(x) -> ComplexInterval:
    if isinstance(x, ComplexInterval):
        return x
    if isinstance(x, Interval):
        return ComplexInterval(x, _zero_iv())
    return ComplexInterval.from_complex(x)


def _cdiv(a: ComplexInterval, b: ComplexInterval) -> ComplexInterval:
    den = b.re.square() + b.im.square()
    num = a * ComplexInterval(b.re, -b.im)
    return ComplexInterval(num.re / den, num.im / den)


def _det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _matmul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = Interval.point(0.0)
            for t in range(k):
                acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def _transpose(a):
    return [list(r) for r in zip(*a)]


def symplectic_form(n: int):
    """``J = [[0, -I], [I, 0]]`` for coordinates ordered (momenta, positions)."""
    J = [[Interval.point(0.0)] * (2 * n) for _ in range(2 * n)]
    J = [list(r) for r in J]
    for i in range(n):
        J[i][n + i] = Interval.point(-1.0)
        J[n + i][i] = Interval.point(1.0)
    return J


def _eigvec(A, lam: ComplexInterval, A_mid: np.ndarray, lam_mid: complex):
    """Enclosure of the eigenvector of ``A`` for ``lam`` normalized at a pivot entry."""
    m = A_mid - lam_mid * np.eye(4)
    _, _, vh = np.linalg.svd(m)
    v_mid = vh[-1].conj()
    piv = int(np.argmax(np.abs(v_mid)))
    others = [k for k in range(4) if k != piv]
    # choose the three rows with the best-conditioned subsystem
    best = None
    for drop in range(4):
        rows = [i for i in range(4) if i != drop]
        sub = m[np.ix_(rows, others)]
        d = abs(np.linalg.det(sub))
        if best is None or d > best[0]:
            best = (d, rows)
    rows = best[1]
    M = [[_civ(A[i][k]) - (lam if i == k else _civ(0.0)) for k in range(4)] for i in range(4)]
    sub = [[M[i][k] for k in others] for i in rows]
    rhs = [-M[i][piv] for i in rows]
    det = _det3(sub)
    sol = []
    for c in range(3):
        mat = [[rhs[i] if k == c else sub[i][k] for k in range(3)] for i in range(3)]
        sol.append(_cdiv(_det3(mat), det))
    v = [None] * 4
    v[piv] = _civ(1.0)
    for k, val in zip(others, sol):
        v[k] = val
    return v


def symplectic_diagonalize(S, nu):
    """Symplectic ``C`` with ``C^T S C = diag(nu_1, nu_2, nu_1, nu_2)``.

    Parameters
    ----------
    S : 4x4 nested list of Interval
        Hessian of the quadratic part in the order ``(P_X, P_Y, X, Y)``.
    nu : tuple of Interval
        Signed frequencies; ``i nu_j`` must be eigenvalues of ``J S``.

    Returns
    -------
    C : 4x4 nested list of Interval
        Columns ordered ``(y_1, y_2, x_1, x_2)``.

    Raises
    ------
    ValueError
        If the equilibrium is not elliptic or a symplectic normalization fails.
    """
    n = 2
    J = symplectic_form(n)
    A = _matmul(J, S)
    A_mid = np.array([[a.mid for a in row] for row in A])
    ev = np.linalg.eigvals(A_mid)
    if np.max(np.abs(ev.real)) > 1e-8 * max(1.0, np.max(np.abs(ev))):
        raise ValueError("not an elliptic equilibrium")
    cols_y, cols_x = [], []
    for j in range(n):
        lam = ComplexInterval(_zero_iv(), nu[j])
        v = _eigvec(A, lam, A_mid, 1j * nu[j].mid)
        a = [c.re for c in v]
        b = [c.im for c in v]
        # pairing a^T J b fixes the scale
        Jb = [sum((J[i][k] * b[k] for k in range(4)), Interval.point(0.0)) for i in range(4)]
        pair = sum((a[i] * Jb[i] for i in range(4)), Interval.point(0.0))
        if pair.lo <= 0:
            raise ValueError("eigenvector pairing is not positive; check the frequency signs")
        s = Interval.point(1.0) / pair.sqrt()
        cols_y.append([x * s for x in a])
        cols_x.append([-(x * s) for x in b])
    cols = cols_y + cols_x
    return [[cols[c][r] for c in range(4)] for r in range(4)]


def check_symplectic(C):
    """Entries of ``C^T J C - J`` as intervals."""
    J = symplectic_form(len(C) // 2)
    M = _matmul(_matmul(_transpose(C), J), C)
    return [[M[i][k] - J[i][k] for k in range(len(C))] for i in range(len(C))]


# -- truncated series in the complex variables ------------------------------------

class Series:
    """Truncated power series ``{degree: HomoPoly}`` up to ``top``."""

    def __init__(self, n: int, top: int, terms: Optional[dict] = None):
        self.n = n
        self.top = top
        self.terms = {d: p for d, p in (terms or {}).items() if d <= top}

    @classmethod
    def constant(cls, n: int, top: int, c) -> "Series":
        return cls(n, top, {0: HomoPoly.from_terms(n, 0, {((0,) * n, (0,) * n): _civ(c)})})

    def __add__(self, other: "Series") -> "Series":
        out = dict(self.terms)
        for d, p in other.terms.items():
            out[d] = out[d] + p if d in out else p
        return Series(self.n, self.top, out)

    def __neg__(self):
        return Series(self.n, self.top, {d: -p for d, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "Series":
        return Series(self.n, self.top, {d: p.scale(c) for d, p in self.terms.items()})

    def __mul__(self, other: "Series") -> "Series":
        out = {}
        for da, pa in self.terms.items():
            for db, pb in other.terms.items():
                if da + db > self.top or pa.is_zero or pb.is_zero:
                    continue
                q = product(pa, pb)
                out[da + db] = out[da + db] + q if da + db in out else q
        return Series(self.n, self.top, out)

    def without_constant(self) -> "Series":
        return Series(self.n, self.top, {d: p for d, p in self.terms.items() if d > 0})

    def compose(self, coeffs) -> "Series":
        """``sum_k coeffs[k] * self**k`` for a series without constant term."""
        if 0 in self.terms and not self.terms[0].is_zero:
            raise ValueError("composition needs a series without constant term")
        out = Series.constant(self.n, self.top, coeffs[0])
        power = Series.constant(self.n, self.top, 1.0)
        for k in range(1, min(len(coeffs), self.top + 1)):
            power = power * self
            if not power.terms:
                break
            out = out + power.scale(coeffs[k])
        return out


def _linear_series(n: int, top: int, poly: HomoPoly) -> Series:
    return Series(n, top, {1: poly})


def _taylor_cos_sin(top: int):
    """Coefficients of cos and sin as intervals."""
    cos_c, sin_c = [], []
    fact = Fraction(1)
    for k in range(top + 1):
        if k:
            fact *= k
        val = Interval.from_value(Fraction(1) / fact)
        if k % 2 == 0:
            cos_c.append(val if k % 4 == 0 else -val)
            sin_c.append(_zero_iv())
        else:
            cos_c.append(_zero_iv())
            sin_c.append(val if k % 4 == 1 else -val)
    return cos_c, sin_c


def _binomial_series(alpha: Fraction, top: int):
    out = []
    c = Fraction(1)
    for k in range(top + 1):
        out.append(Interval.from_value(c))
        c = c * (alpha - k) / (k + 1)
    return out


@dataclass
class CPRTBPModel:
    """Intermediate objects of the three-body expansion (for inspection and tests)."""

    mu: Interval
    nu: tuple
    S: list
    C: list
    series: Series
    logE: float
    log_a0: float
    log_m: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _local_hamiltonian(mu: Interval, point: str, top: int, forms):
    """Taylor series of the local Hamiltonian in terms of linear forms for (P_X, P_Y, X, Y)."""
    n = 2
    PX, PY, X, Y = (_linear_series(n, top, f) for f in forms)
    one = Series.constant(n, top, 1.0)
    half = Interval.point(0.5)
    sin_t = Interval.point(3.0).sqrt() / 2
    cos_t = Interval.point(-0.5)
    # cos(Y -+ 2 pi/3) = cos_t cos Y +- sin_t sin Y (upper sign for L4)
    sign = 1.0 if point.upper() == "L4" else -1.0
    cos_c, sin_c = _taylor_cos_sin(top)
    cosY = Y.compose(cos_c)
    sinY = Y.compose(sin_c)
    c = cosY.scale(cos_t) + sinY.scale(sin_t * sign)

    inv1 = X.compose([Interval.point(float((-1) ** k)) for k in range(top + 1)])
    inv2 = X.compose([Interval.point(float((-1) ** k * (k + 1))) for k in range(top + 1)])
    py1 = one + PY
    H = (PX * PX).scale(half) + (py1 * py1 * inv2).scale(half) - PY
    H = H - ((one + X) * c).scale(mu)
    H = H - inv1.scale(1 - mu)
    w = (one + X) * (one + X) + (one + X) * c.scale(2.0) - one
    w = w.without_constant()
    H = H - w.compose(_binomial_series(Fraction(-1, 2), top)).scale(mu)
    return H


_EPS = 2.0 ** -52
_TINY = 2.0 ** -1074
# target value of the square-root argument majorant at the Cauchy radius
_W_TARGET = 0.95


def _pos_up(x, ops: int):
    """Upper bound of a nonnegative quantity computed with ``ops`` roundings."""
    return np.asarray(x, dtype=float) * (1.0 + (ops + 2) * _EPS) + _TINY


def _wbar_float(t: float, lx: float, ly: float) -> float:
    c1 = 0.5 * (math.cosh(ly * t) - 1.0) + math.sqrt(3.0) / 2.0 * math.sinh(ly * t)
    return 2.0 * c1 + 2.0 * lx * t * (1.5 + c1) + (lx * t) ** 2


def _cauchy_radius(lx: float, ly: float) -> float:
    """Radius ``t0`` where the square-root argument majorant is about ``_W_TARGET``."""
    lo, hi = 0.0, 0.9 / max(lx, 1e-300)
    if _wbar_float(hi, lx, ly) <= _W_TARGET:
        return hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _wbar_float(mid, lx, ly) <= _W_TARGET:
            lo = mid
        else:
            hi = mid
    return lo


def _exp_series(ell: float, N: int) -> np.ndarray:
    out = np.empty(N)
    out[0] = 1.0
    for k in range(1, N):
        out[k] = float(_pos_up(out[k - 1] * ell / k, 2))
    return out


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    N = len(a)
    return _pos_up(np.convolve(a, b)[:N], 2 * N)


def _inv_sqrt_series(w: np.ndarray) -> np.ndarray:
    """Coefficients of ``(1 - w)**(-1/2)`` for a nonnegative series with ``w[0] = 0``."""
    N = len(w)
    y = np.zeros(N)
    y[0] = 1.0
    k = np.arange(N, dtype=float)
    for m in range(1, N):
        a = 0.5 * np.dot(k[1 : m + 1] * w[1 : m + 1], y[m - 1 :: -1][:m])
        b = np.dot(w[1:m], (m - k[1:m]) * y[m - 1 : 0 : -1])
        y[m] = float(_pos_up((a + b) / m, 3 * m + 6))
    return y


def majorant_coefficients(mu: Interval, lam: dict, t0: float, N: int) -> np.ndarray:
    """Upper bounds ``c_d >= ||H_d|| t0**d`` for ``d < N`` from a majorant series.

    Each building block of the Hamiltonian is replaced by the series of the
    moduli of its coefficients, with every linear form ``v`` replaced by
    ``||v|| t``; the norm is submultiplicative, so the result dominates.
    """
    if N < 3:
        return majorant_coefficients(mu, lam, t0, 3)[:N]
    lx, ly, lpx, lpy = (float(_pos_up(lam[k] * t0, 1)) for k in ("X", "Y", "PX", "PY"))
    mu_hi = mu.hi
    one_mu = float(_pos_up(1.0 - mu.lo, 1))
    e = _exp_series(ly, N)
    cosh1 = np.where(np.arange(N) % 2 == 0, e, 0.0)
    cosh1[0] = 0.0
    sinh = np.where(np.arange(N) % 2 == 1, e, 0.0)
    s3 = float(_pos_up(math.sqrt(3.0) / 2.0, 2))
    c1 = _pos_up(0.5 * cosh1 + s3 * sinh, 3)
    lin_x = np.zeros(N)
    lin_x[1] = lx
    c_full = c1.copy()
    c_full[0] += 1.5
    w = _pos_up(2.0 * c1 + 2.0 * _mul(lin_x, c_full) + _mul(lin_x, lin_x), 4)
    root = _inv_sqrt_series(w)
    geo = _pos_up(np.power(lx, np.arange(N, dtype=float)), N)
    geo2 = _pos_up(geo * (np.arange(N) + 1.0), 2)
    py = np.zeros(N)
    py[0] = 1.0
    py[1] = lpy
    M = np.zeros(N)
    M[2] += float(_pos_up(0.5 * lpx * lpx, 2))
    M += 0.5 * _mul(_mul(py, py), geo2)
    M[1] += lpy
    one_x = np.zeros(N)
    one_x[0] = 1.0
    one_x[1] = lx
    M += mu_hi * _mul(one_x, c_full)
    M += one_mu * geo
    M += mu_hi * root
    return _pos_up(M, 12)


def _tail_majorant(mu: Interval, lam: dict, N: int = 0):
    """Cauchy estimate ``||H_d|| <= E a0**d`` plus per-degree majorant coefficients.

    Returns
    -------
    logE, log_a0 : float
    log_m : ndarray
        ``log`` of the per-degree bounds for ``d < N`` (empty when ``N == 0``).
    """
    lx, ly = lam["X"], lam["Y"]
    t0 = _cauchy_radius(lx, ly)
    t = Interval.point(t0)
    LX, LY, LPY, LPX = (Interval.point(lam[k]) * t for k in ("X", "Y", "PY", "PX"))
    e_y = _exp_interval(LY)
    one = Interval.point(1.0)
    cbI = (e_y + one / e_y) / 2 - one
    sbI = (e_y - one / e_y) / 2
    c1I = cbI / 2 + sbI * (Interval.point(3.0).sqrt() / 2)
    wI = 2 * c1I + 2 * LX * (Interval.point(1.5) + c1I) + LX.square()
    if wI.hi >= 1 or LX.hi >= 1:
        raise ValueError("majorant radius selection failed")
    M = (
        LPX.square() / 2
        + (one + LPY).square() / ((one - LX).square() * 2)
        + LPY
        + mu * (one + LX) * (Interval.point(1.5) + c1I)
        + (one - mu) / (one - LX)
        + mu / (one - wI).sqrt()
    )
    logE = log_plus(M.hi)
    log_a0 = float(round_up(-math.log(t0) * (1 + 4 * _EPS)))
    if N <= 0:
        return logE, log_a0, np.zeros(0)
    c = majorant_coefficients(mu, lam, t0, N)
    d = np.arange(N, dtype=float)
    # raising tiny coefficients to the safe floor keeps them upper bounds
    log_c = log_plus_array(np.maximum(c, SAFE_MIN))
    log_m = round_up(log_c + round_up(d * log_a0))
    return logE, log_a0, np.maximum(log_m, ZERO_LOG)


def _exp_interval(x: Interval) -> Interval:
    lo = math.exp(x.lo) * (1 - 1e-15)
    hi = math.exp(x.hi) * (1 + 1e-15)
    return Interval(lo, hi)


def cprtbp_model(mu, point: str = "L4", degree: int = 8, majorant_degree: int = 0) -> CPRTBPModel:
    """Expand the local three-body Hamiltonian around a triangular point.

    Parameters
    ----------
    mu : float, str or Fraction
        Mass ratio (a preset name is accepted).
    point : {'L4', 'L5'}
    degree : int
        Highest degree of the explicit expansion.
    majorant_degree : int
        Highest degree for which per-degree majorant bounds are kept.
    """
    if point.upper() not in ("L4", "L5"):
        raise ValueError("point must be L4 or L5")
    m = _mu_interval(mu)
    nu = cprtbp_frequencies(mu)
    n = 2
    top = degree
    # quadratic part from a real expansion in (P_X, P_Y, X, Y)
    S = _hessian(m, point)
    C = symplectic_diagonalize(S, nu)
    xs, ys = linear_forms(n)
    new_vars = ys + xs  # (y1, y2, x1, x2)
    forms = []
    for row in C:
        acc = HomoPoly.zero(n, 1)
        for coef, var in zip(row, new_vars):
            acc = acc + var.scale(coef)
        forms.append(acc)
    H = _local_hamiltonian(m, point, top, forms)
    lam = {
        "PX": forms[0].norm().hi,
        "PY": forms[1].norm().hi,
        "X": forms[2].norm().hi,
        "Y": forms[3].norm().hi,
    }
    logE, log_a0, log_m = _tail_majorant(m, lam, majorant_degree + 1 if majorant_degree > 0 else 0)
    return CPRTBPModel(m, nu, S, C, H, logE, log_a0, log_m)


def _hessian(mu: Interval, point: str):
    """Second derivatives of the local Hamiltonian at the origin, order (P_X, P_Y, X, Y)."""
    top = 2
    # differentiate through a one-variable-at-a-time real expansion
    forms = []
    for k in range(4):
        e = [0] * 4
        e[k] = 1
        forms.append(HomoPoly.from_terms(2, 1, {((e[0], e[1]), (e[2], e[3])): 1.0}))
    H = _local_hamiltonian(mu, point, top, forms)
    quad = H.terms[2]
    S = [[Interval.point(0.0) for _ in range(4)] for _ in range(4)]
    for (l, lt), c in quad.coeffs.items():
        e = list(l) + list(lt)
        idx = [i for i in range(4) for _ in range(e[i])]
        i, k = idx
        if i == k:
            S[i][i] = c.re * 2
        else:
            S[i][k] = c.re
            S[k][i] = c.re
    return S


def cprtbp_hamiltonian(
    mu,
    point: str = "L4",
    R_I: int = 6,
    R_II: int = 100,
    mode: ResonanceMode = ResonanceMode(),
) -> HamiltonianState:
    """Initial state for the planar restricted three-body problem at ``L4``/``L5``.

    The explicit terms run to degree ``R_I + 2``; beyond that every class is
    bounded by the per-degree majorant, and beyond ``R_II`` by ``E a0**(s+2)``.
    """
    model = cprtbp_model(mu, point, R_I + 2, R_II + 2)
    return state_from_model(model, R_I, R_II, mode)


def state_from_model(model: CPRTBPModel, R_I: int, R_II: int, mode: ResonanceMode) -> HamiltonianState:
    f_terms = {}
    for d, p in model.series.terms.items():
        if d >= 3:
            f_terms[d - 2] = p
    logF = {}
    for s in range(R_I + 1, R_II + 1):
        geo = float(round_up(model.logE + round_up((s + 2) * model.log_a0)))
        if s + 2 < len(model.log_m):
            geo = min(geo, float(model.log_m[s + 2]))
        logF[s] = geo
    return HamiltonianState.initial(
        Frequencies(model.nu), f_terms, R_I, R_II, model.logE, model.log_a0, mode=mode, logF=logF
    )


def elt_threshold(mu) -> float:
    """Expected residual lifetime in orbital revolutions of the smaller primary.

    ``mu`` must be a preset name; the threshold is ``6 Gyr / period``.
    """
    key = str(mu).lower()
    if key not in PERIOD_YEARS:
        raise ValueError(f"no orbital period known for {mu!r}")
    return ELT_YEARS / PERIOD_YEARS[key]
