"""Majorant recursion, geometric tails, remainder and escape-time bounds.

All quantities are natural logarithms of nonnegative numbers, rounded in
the direction that keeps the final statement valid: upper bounds for norms,
remainders and action rates, lower bounds for escape times.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .rigor import (
    ZERO_LOG,
    BoundKind,
    LogBound,
    _exp_neg_up,
    log_add_upper_array,
    log_minus,
    log_plus,
    log_plus_array,
    log_sum_upper,
    round_down,
    round_up,
)

if TYPE_CHECKING:  # pragma: no cover
    from .normalform import HamiltonianState, NormSnapshot


class TailDivergence(ArithmeticError):
    """The geometric tail ``a_r * rho`` is not below one."""


class NoStableRegime(ArithmeticError):
    """The remainder trace never reached a minimum."""


def log_norm(p) -> float:
    """Upper bound of ``log ||p||`` (``ZERO_LOG`` for the zero polynomial)."""
    hi = p.norm().hi
    return log_plus(hi) if hi > 0 else ZERO_LOG


def _up(x) -> float:
    return float(round_up(x))


def _dn(x) -> float:
    return float(round_down(x))


# ---------------------------------------------------------------------------
# majorant recursion
# ---------------------------------------------------------------------------

def iterate_table(
    logF: np.ndarray,
    src_s: np.ndarray,
    src_logv: np.ndarray,
    r: int,
    logD: float,
    lower_cut: int,
) -> np.ndarray:
    """Redefine the majorants after a step of order ``r``.

    For every source class ``s`` and ``j >= 1`` with ``lower_cut < s + j r``
    within the table, ``logF[s + j r]`` absorbs
    ``log(prod_{i<j} (s + i r + 2) / j!) + j log D_r + log F_s``.

    Parameters
    ----------
    logF : ndarray
        Current table indexed by class, length ``R_II + 1``.
    src_s, src_logv : ndarray
        Source classes and upper bounds of their log-norms (pre-step values).
    r : int
        Order of the step.
    logD : float
        Upper bound of ``log D_r``; ``ZERO_LOG`` leaves the table unchanged.
    lower_cut : int
        Classes ``<= lower_cut`` are explicit and not touched.

    Returns
    -------
    ndarray
        The new table.
    """
    out = np.array(logF, dtype=float, copy=True)
    top = out.size - 1
    if logD <= ZERO_LOG or src_s.size == 0:
        return out
    s = np.asarray(src_s, dtype=np.int64)
    v = np.asarray(src_logv, dtype=float)
    coef = np.zeros(s.size)
    j = 1
    while True:
        alive = s + j * r <= top
        if not np.any(alive):
            break
        s, v, coef = s[alive], v[alive], coef[alive]
        # factor (s + (j-1) r + 2) / j of the product, bounded above
        ratio = round_up((s + (j - 1) * r + 2).astype(float) / j)
        coef = round_up(coef + log_plus_array(ratio))
        term = round_up(round_up(coef + round_up(j * logD)) + v)
        tgt = s + j * r
        hit = tgt > lower_cut
        if np.any(hit):
            out[tgt[hit]] = log_add_upper_array(out[tgt[hit]], term[hit])
        j += 1
    return out


def iterate_majorants(state: "HamiltonianState", r: int, logD: float) -> np.ndarray:
    """Majorant table after step ``r`` of ``state`` (sources taken before the step)."""
    s, v = state.sources(r)
    return iterate_table(state.logF, s, v, r, logD, state.R_I)


def update_tail(log_a_prev: float, r: int, logD: float) -> float:
    """``log a_r = log a_(r-1) + log(1 + (r+1) D_r / a_(r-1)**r) / r``, rounded up."""
    if logD <= ZERO_LOG:
        return float(log_a_prev)
    u = _up(_up(log_plus(r + 1) + logD) - _dn(r * log_a_prev))
    inc = float(log_add_upper_array(np.array([0.0]), np.array([u]))[0])
    return _up(log_a_prev + _up(inc / r))


# ---------------------------------------------------------------------------
# remainder and action rate
# ---------------------------------------------------------------------------

def _log_rho(rho: float) -> float:
    if not rho > 0:
        raise ValueError("rho must be positive")
    return log_plus(rho)


def log_tail(state: "HamiltonianState", rho: float, weighted: bool = False) -> float:
    """Upper bound of ``log E sum_{s > R_II} w_s (a rho)**(s+2)``.

    ``w_s = 1`` for the remainder, ``w_s = s + 2`` for the action rate.

    Raises
    ------
    TailDivergence
        If ``a_r rho >= 1``.
    """
    q = _up(state.log_a + _log_rho(rho))
    if q >= 0.0:
        raise TailDivergence(f"tail divergent at this rho (log(a rho) = {q:.4g})")
    x_up = float(_exp_neg_up(np.array([q]))[0])
    one_minus = _dn(1.0 - x_up)
    if one_minus <= 0.0:
        raise TailDivergence("tail divergent at this rho")
    m0 = state.R_II + 3
    head = _up(state.logE + _up(m0 * q))
    if not weighted:
        return _up(head - log_minus(one_minus))
    # sum_{m >= m0} m x^m = x^m0 (m0 - (m0 - 1) x) / (1 - x)^2
    poly = _up(m0 - _dn((m0 - 1) * x_up))
    return _up(_up(head + log_plus(poly)) - _dn(2.0 * log_minus(one_minus)))


def _series_terms(state: "HamiltonianState", rho: float, weighted: bool) -> list:
    r = state.r
    lr = _log_rho(rho)
    terms = []
    for s in range(r + 1, state.R_I + 1):
        v = state.log_norm_f(s)
        if v <= ZERO_LOG:
            continue
        t = _up(v + _up((s + 2) * lr))
        if weighted:
            t = _up(t + log_plus(s + 2))
        terms.append(t)
    lo = max(r, state.R_I) + 1
    if lo <= state.R_II:
        s = np.arange(lo, state.R_II + 1)
        v = state.logF[lo:]
        live = v > ZERO_LOG
        if np.any(live):
            s, v = s[live], v[live]
            t = round_up(v + round_up((s + 2) * lr))
            if weighted:
                t = round_up(t + log_plus_array((s + 2).astype(float)))
            terms.extend(t.tolist())
    return terms


def remainder_bound(state: "HamiltonianState", rho: float, tail: bool = True) -> LogBound:
    """Upper bound of ``log |R^(r)|_rho``.

    Sums explicit norms for ``r < s <= R_I``, majorants for ``R_I < s <= R_II``
    and, when ``tail`` is true, the geometric tail beyond ``R_II``.
    """
    terms = _series_terms(state, rho, weighted=False)
    if tail:
        terms.append(log_tail(state, rho, weighted=False))
    return LogBound(log_sum_upper(terms), BoundKind.UPPER)


def action_rate_bound(state: "HamiltonianState", rho: float, tail: bool = True) -> LogBound:
    """Upper bound of ``log max_j |dI_j/dt|`` on the ball of radius ``rho``.

    Uses ``sum_s (s + 2) rho**(s+2) ||f_s||``: the bracket with an action
    ``I_j`` multiplies a monomial by at most its degree.
    """
    terms = _series_terms(state, rho, weighted=True)
    if tail:
        terms.append(log_tail(state, rho, weighted=True))
    return LogBound(log_sum_upper(terms), BoundKind.UPPER)


def escape_time(
    state: "HamiltonianState", rho: float, rho0: float, tail: bool = True
) -> LogBound:
    """Lower bound of ``log T`` with ``T = (rho**2 - rho0**2) / max_j |dI_j/dt|``.

    Raises
    ------
    ValueError
        If ``rho0 >= rho``.
    """
    if not 0 < rho0 < rho:
        raise ValueError("need 0 < rho0 < rho")
    num = _dn(_dn(rho * rho) - _up(rho0 * rho0))
    if num <= 0:
        raise ValueError("rho0 too close to rho for a positive numerator")
    den = action_rate_bound(state, rho, tail=tail).logval
    return LogBound(_dn(log_minus(num) - den), BoundKind.LOWER)


def rho0_optimal(rho: float, r_opt: int) -> float:
    """``sqrt((r_opt + 1) / (r_opt + 3)) * rho`` rounded down."""
    if r_opt < 1:
        raise ValueError("r_opt must be >= 1")
    ratio = _dn(float(r_opt + 1) / float(r_opt + 3))
    return _dn(_dn(math.sqrt(ratio)) * rho)


# ---------------------------------------------------------------------------
# optimal step scan
# ---------------------------------------------------------------------------

@dataclass
class StabilityResult:
    """One row of the non-resonant report."""

    rho: float
    rho0: float
    r_opt: int
    a_r: float
    log_remainder: LogBound
    log_action_rate: LogBound
    log_T: LogBound
    trace: list = field(default_factory=list)
    snapshot: Optional["NormSnapshot"] = field(default=None, repr=False, compare=False)

    def row(self) -> dict:
        ln10 = math.log(10.0)
        return {
            "rho0": self.rho0,
            "rho": self.rho,
            "r_opt": self.r_opt,
            "a_r": self.a_r,
            "log10_R": self.log_remainder.logval / ln10,
            "log10_Idot": self.log_action_rate.logval / ln10,
            "log10_T": self.log_T.logval / ln10,
        }


class _Tracker:
    """Remainder trace of one radius along a shared sequence of states."""

    def __init__(self, rho: float, tail: bool):
        self.rho = rho
        self.tail = tail
        self.trace: list = []
        self.best = None
        self.done = False
        self.error: Optional[Exception] = None

    def feed(self, state: "HamiltonianState"):
        try:
            val = remainder_bound(state, self.rho, tail=self.tail).logval
        except TailDivergence as exc:
            # a divergent tail before any minimum means no result
            if self.best is None:
                self.error = NoStableRegime(f"no stable regime at rho={self.rho}: {exc}")
            self.done = True
            return
        self.trace.append((state.r, val))
        if self.best is not None and val > self.best[1]:
            self.done = True
            return
        self.best = (state.r, val, state)


def _result(tr: _Tracker, time_tail: bool) -> StabilityResult:
    r_opt, rem, st = tr.best
    rho0 = rho0_optimal(tr.rho, r_opt)
    return StabilityResult(
        rho=tr.rho,
        rho0=rho0,
        r_opt=r_opt,
        a_r=math.exp(st.log_a),
        log_remainder=LogBound(rem),
        log_action_rate=action_rate_bound(st, tr.rho, tail=time_tail),
        log_T=escape_time(st, tr.rho, rho0, tail=time_tail),
        trace=list(tr.trace),
        snapshot=st,
    )


def optimal_scan_grid(
    state: "HamiltonianState",
    rhos: Sequence[float],
    tail: bool = True,
    time_tail: bool = True,
    max_r: Optional[int] = None,
    on_step=None,
    history: Sequence = (),
) -> list:
    """Optimal-step scan for several radii sharing one normalization run.

    The state sequence does not depend on ``rho``, so each radius only
    evaluates its remainder after every step and stops at the first increase.

    Parameters
    ----------
    on_step : callable, optional
        Called as ``on_step(state, snapshot)`` after every step.
    history : sequence of NormSnapshot
        Snapshots of steps already taken (for resumed runs); they are fed to
        the trackers before ``state`` is advanced.

    Returns
    -------
    list
        A :class:`StabilityResult` or an exception instance per radius.
    """
    from .normalform import step

    trackers = [_Tracker(float(r), tail) for r in rhos]
    for snap in history:
        for t in trackers:
            if not t.done:
                t.feed(snap)
    limit = state.R_II if max_r is None else min(max_r, state.R_II)
    while any(not t.done for t in trackers) and state.r < limit:
        state = step(state)
        snap = state.snapshot()
        if on_step is not None:
            on_step(state, snap)
        for t in trackers:
            if not t.done:
                t.feed(snap)
    out = []
    for t in trackers:
        if t.error is not None:
            out.append(t.error)
        elif t.best is None:
            out.append(NoStableRegime(f"no stable regime at rho={t.rho}"))
        else:
            if not t.done:
                warnings.warn(f"remainder still decreasing at r={t.best[0]} for rho={t.rho}")
            out.append(_result(t, time_tail))
    return out


def optimal_scan(
    state: "HamiltonianState", rho: float, tail: bool = True, time_tail: bool = True
) -> StabilityResult:
    """Normalize step by step and stop at the first increase of the remainder."""
    res = optimal_scan_grid(state, [rho], tail=tail, time_tail=time_tail)[0]
    if isinstance(res, Exception):
        raise res
    return res


# ---------------------------------------------------------------------------
# resonant confinement
# ---------------------------------------------------------------------------

@dataclass
class ResonantStability:
    """One row of the resonant report."""

    rho0_sq: float
    rhostar_sq: float
    rho_sq: float
    beta: float
    delta_I: LogBound
    log_T: LogBound
    r_opt: int = 0

    def row(self) -> dict:
        return {
            "rho0sq": self.rho0_sq,
            "rhostar2sq": self.rhostar_sq,
            "rhosq": self.rho_sq,
            "T": math.exp(self.log_T.logval),
        }


def _nu_bounds(nu, j):
    w = nu.omega[j]
    return w.lo, w.hi


def resonant_rho0(rho: float, beta: float, nu, m: int = 2) -> float:
    """Solve ``beta rho**2 = rho**2 + nu_1 (rho**2 - rho0**2) / nu_m`` for ``rho0``.

    The solution ``rho0**2 = rho**2 - nu_m (beta - 1) rho**2 / nu_1`` is
    rounded down.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    n1_lo, n1_hi = _nu_bounds(nu, 0)
    nm_lo, nm_hi = _nu_bounds(nu, m - 1)
    if not (n1_lo > 0 and nm_hi < 0) and not (n1_hi < 0 and nm_lo > 0):
        raise ValueError("nu_1 and nu_m must have opposite signs")
    rho_sq = _dn(rho * rho)
    # |nu_m| (1 - beta) rho^2 / |nu_1| bounded above
    num = _up(_up(max(abs(nm_lo), abs(nm_hi)) * _up(1.0 - beta)) * _up(rho * rho))
    shift = _up(num / min(abs(n1_lo), abs(n1_hi)))
    r0sq = _dn(rho_sq - shift)
    if not 0 < r0sq < rho_sq:
        raise ValueError("no admissible rho0 in (0, rho)")
    return _dn(math.sqrt(r0sq))


def normal_form_sup(state: "HamiltonianState", rho: float) -> float:
    """Upper bound of ``log sup |Z_1 + ... + Z_r|`` on the ball (quadratic part excluded)."""
    lr = _log_rho(rho)
    terms = []
    for s in range(1, state.r + 1):
        v = state.log_norm_Z(s)
        if v > ZERO_LOG:
            terms.append(_up(v + _up((s + 2) * lr)))
    return log_sum_upper(terms)


def resonant_excursion(
    state: "HamiltonianState", rho: float, rho0: float, tail: bool = True, halvings: int = 0
):
    """Bound the variation of the resonant action through energy conservation.

    Over a time ``T / 2**halvings`` each non-resonant action moves by at most
    ``(rho**2 - rho0**2) / 2**halvings``.

    Returns
    -------
    delta_I : LogBound
        Upper bound of ``log Delta I_m``.
    rhostar_sq : float
        ``rho**2 - Delta I_m`` rounded down.

    Raises
    ------
    ValueError
        If the resonant action cannot be confined.
    """
    m = state.mode.index
    if m is None:
        raise ValueError("state is not in resonant mode")
    nu = state.omega
    gap = math.ldexp(_up(_up(rho * rho) - _dn(rho0 * rho0)), -halvings)
    lin = 0.0
    for j in range(nu.n):
        if j == m - 1:
            continue
        lin = _up(lin + _up(nu.omega[j].mag * gap))
    terms = [log_plus(lin)] if lin > 0 else []
    var = log_sum_upper(
        [normal_form_sup(state, rho), remainder_bound(state, rho, tail=tail).logval]
    )
    if var > ZERO_LOG:
        terms.append(_up(var + log_plus(2.0)))
    nu_m = nu.omega[m - 1]
    nu_m_min = min(abs(nu_m.lo), abs(nu_m.hi))
    logdI = _up(log_sum_upper(terms) - log_minus(nu_m_min))
    dI = float(_exp_up(logdI))
    rhostar_sq = _dn(_dn(rho * rho) - dI)
    if rhostar_sq <= 0:
        raise ValueError("resonant action not confinable")
    return LogBound(logdI), rhostar_sq


def _exp_up(x: float) -> float:
    if x <= 0:
        return float(_exp_neg_up(np.array([x]))[0])
    # e^x = (e^(x/2^k))^(2^k) with the argument brought into [0, 1]
    from .rigor import exp_plus

    k = 0
    y = x
    while y > 1.0:
        y *= 0.5
        k += 1
    v = exp_plus(y)
    for _ in range(k):
        v = _up(v * v)
    return v


def resonant_from_scan(
    tr: StabilityResult,
    beta: float = 0.9,
    tail: bool = True,
    time_tail: bool = True,
    max_iter: int = 8,
) -> ResonantStability:
    """Resonant confinement built on an optimal-step result of a resonant state.

    The escape time comes from the non-resonant actions; the resonant action
    is then checked to stay inside the ball over that time.  A failing check
    halves the time window, which shrinks the drift of the non-resonant
    actions entering the energy balance, up to ``max_iter`` times.
    """
    st = tr.snapshot
    m = st.mode.index
    if m is None:
        raise ValueError("state is not in resonant mode")
    rho = tr.rho
    rho0 = resonant_rho0(rho, beta, st.omega, m)
    logT = escape_time(st, rho, rho0, tail=time_tail).logval
    last_exc = None
    for k in range(max_iter):
        try:
            dI, rstar = resonant_excursion(st, rho, rho0, tail=tail, halvings=k)
        except ValueError as exc:
            last_exc = exc
            continue
        return ResonantStability(
            rho0_sq=_dn(rho0 * rho0),
            rhostar_sq=rstar,
            rho_sq=_dn(rho * rho),
            beta=beta,
            delta_I=dI,
            log_T=LogBound(_dn(logT - _up(k * math.log(2.0))), BoundKind.LOWER),
            r_opt=tr.r_opt,
        )
    raise ValueError(f"resonant action not confinable: {last_exc}")


def resonant_pipeline(
    state: "HamiltonianState",
    rho: float,
    beta: float = 0.9,
    tail: bool = True,
    time_tail: bool = True,
    max_iter: int = 8,
) -> ResonantStability:
    """Optimal step, ``rho0`` from ``beta``, escape time and resonant excursion."""
    if state.mode.index is None:
        raise ValueError("state is not in resonant mode")
    tr = optimal_scan(state, rho, tail=tail, time_tail=time_tail)
    return resonant_from_scan(tr, beta, tail, time_tail, max_iter)


def resonant_scan_grid(
    state: "HamiltonianState",
    rhos: Sequence[float],
    beta: float = 0.9,
    tail: bool = True,
    time_tail: bool = True,
    max_r: Optional[int] = None,
    on_step=None,
    history: Sequence = (),
) -> list:
    """:func:`resonant_pipeline` for several radii sharing one normalization run."""
    if state.mode.index is None:
        raise ValueError("state is not in resonant mode")
    out = []
    for res in optimal_scan_grid(state, rhos, tail, time_tail, max_r, on_step, history):
        if isinstance(res, Exception):
            out.append(res)
            continue
        try:
            out.append(resonant_from_scan(res, beta, tail, time_tail))
        except ValueError as exc:
            out.append(exc)
    return out


def stability_radius(results: Sequence, threshold: float, resonant: bool = False):
    """Largest certified squared radius whose escape time reaches ``threshold``.

    For non-resonant rows this is ``rho0**2``; for resonant rows it is
    ``(rho*)**2``.  Returns ``None`` when no row qualifies.
    """
    log_thr = math.log(threshold)
    best = None
    for res in results:
        if isinstance(res, Exception) or res.log_T.logval < log_thr:
            continue
        val = res.rhostar_sq if resonant else _dn(res.rho0 * res.rho0)
        if best is None or val > best:
            best = val
    return best
