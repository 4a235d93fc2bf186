"""Birkhoff normalization: homological equation, divisors and normalization steps.

A :class:`HamiltonianState` holds the finite representation of the
Hamiltonian after ``r`` steps: explicit normal-form terms ``Z_s`` and
perturbation terms ``f_s`` (``f_s`` homogeneous of degree ``s + 2``) for
``s <= R_I``, logarithmic majorants of ``||f_s||`` and ``||Z_s||`` for
``R_I < s <= R_II``, and the geometric tail pair ``(log E, log a_r)``.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import majorant
from .polyring import HomoPoly, lie_apply
from .rigor import (
    ZERO_LOG,
    Interval,
    log_minus,
    log_plus,
    round_down,
    round_up,
)


class ResonanceError(ArithmeticError):
    """A divisor enclosure contains zero."""


# ---------------------------------------------------------------------------
# frequencies and resonance modes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Frequencies:
    """Frequency vector with interval entries.

    Parameters
    ----------
    omega : tuple of Interval
    diophantine : (gamma, tau), optional
    """

    omega: tuple
    diophantine: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(Interval.from_value(w) for w in self.omega))

    @property
    def n(self) -> int:
        return len(self.omega)

    def lo(self) -> np.ndarray:
        return np.array([w.lo for w in self.omega])

    def hi(self) -> np.ndarray:
        return np.array([w.hi for w in self.omega])


@dataclass(frozen=True)
class ResonanceMode:
    """``NonResonant`` (``index=None``) or a single resonant angle ``index`` (1-based)."""

    index: Optional[int] = None

    @classmethod
    def non_resonant(cls) -> "ResonanceMode":
        return cls(None)

    @classmethod
    def single(cls, m: int) -> "ResonanceMode":
        if m < 1:
            raise ValueError("resonant index is 1-based")
        return cls(int(m))

    @property
    def resonant(self) -> bool:
        return self.index is not None

    def kept(self, k: np.ndarray) -> np.ndarray:
        """Rows of ``k = l - lt`` that stay in the normal form."""
        k = np.asarray(k)
        if self.index is None:
            return np.all(k == 0, axis=-1)
        others = np.delete(k, self.index - 1, axis=-1)
        return np.all(others == 0, axis=-1)

    def label(self) -> str:
        return "nonresonant" if self.index is None else f"resonant:{self.index}"

    @classmethod
    def from_label(cls, text: str) -> "ResonanceMode":
        text = text.strip()
        if text == "nonresonant":
            return cls(None)
        kind, _, idx = text.partition(":")
        if kind != "resonant":
            raise ValueError(f"unknown resonance mode {text!r}")
        return cls.single(int(idx))


def divisor_bounds(omega: Frequencies, k: np.ndarray):
    """Endpoint arrays enclosing ``omega . k`` for integer rows ``k``."""
    k = np.asarray(k, dtype=float)
    lo_w, hi_w = omega.lo(), omega.hi()
    lo = np.zeros(k.shape[0])
    hi = np.zeros(k.shape[0])
    for j in range(k.shape[1]):
        a = np.where(k[:, j] >= 0, k[:, j] * lo_w[j], k[:, j] * hi_w[j])
        b = np.where(k[:, j] >= 0, k[:, j] * hi_w[j], k[:, j] * lo_w[j])
        lo = round_down(lo + round_down(a))
        hi = round_up(hi + round_up(b))
    return lo, hi


@lru_cache(maxsize=None)
def _shell(n: int, m: int) -> np.ndarray:
    """Integer vectors with ``|k|_1 == m``."""
    rows = []
    for comp in itertools.product(range(m + 1), repeat=n):
        if sum(comp) != m:
            continue
        nz = [i for i, c in enumerate(comp) if c]
        for signs in itertools.product((1, -1), repeat=len(nz)):
            v = list(comp)
            for i, s in zip(nz, signs):
                v[i] *= s
            rows.append(v)
    return np.array(rows, dtype=np.int64).reshape(-1, n)


def smallest_divisor(omega: Frequencies, r: int, mode: ResonanceMode = ResonanceMode()) -> Interval:
    """Enclosure of the smallest divisor ``|omega . k|`` over removed ``0 < |k|_1 <= r + 2``.

    Raises
    ------
    ResonanceError
        If some candidate divisor encloses zero.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    best_lo, best_hi = np.inf, np.inf
    for m in range(1, r + 3):
        k = _shell(omega.n, m)
        k = k[~mode.kept(k)]
        if k.size == 0:
            continue
        lo, hi = divisor_bounds(omega, k)
        bad = (lo <= 0) & (hi >= 0)
        if np.any(bad):
            kk = tuple(int(x) for x in k[np.flatnonzero(bad)[0]])
            raise ResonanceError(f"resonance detected at order {r}: k = {kk}")
        alo = np.where(lo > 0, lo, -hi)
        ahi = np.where(lo > 0, hi, -lo)
        best_lo = min(best_lo, float(alo.min()))
        best_hi = min(best_hi, float(ahi.min()))
    return Interval(best_lo, best_hi)


# ---------------------------------------------------------------------------
# homological equation
# ---------------------------------------------------------------------------

def solve_homological(f: HomoPoly, omega: Frequencies, mode: ResonanceMode = ResonanceMode()):
    """Split ``f`` into the generating function ``chi`` and normal-form part ``Z``.

    ``chi`` has coefficients ``-c / (i omega.(l - lt))`` on the removed monomials,
    so that ``{chi, Z0} + f - Z = 0``.

    Returns
    -------
    chi, Z : HomoPoly
    """
    if f.n != omega.n:
        raise ValueError("frequency vector does not match the polynomial")
    b = f.basis
    k = b.resonance
    kept = mode.kept(k)
    nz = f.nonzero_mask()
    removed = nz & ~kept

    zero = np.zeros(b.size)
    keep = kept & nz
    Z = HomoPoly(
        f.n,
        f.degree,
        np.where(keep, f.re_lo, 0.0),
        np.where(keep, f.re_hi, 0.0),
        np.where(keep, f.im_lo, 0.0),
        np.where(keep, f.im_hi, 0.0),
    )
    if not np.any(removed):
        return HomoPoly.zero(f.n, f.degree), Z

    lo, hi = divisor_bounds(omega, k)
    bad = removed & (lo <= 0) & (hi >= 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        row = b.exps[i]
        raise ResonanceError(
            f"divisor encloses zero for l={tuple(row[:f.n])}, lt={tuple(row[f.n:])}"
        )
    # -1/(i d) = i/d, and 1/d has the same sign as d
    safe_lo = np.where(removed, lo, 1.0)
    safe_hi = np.where(removed, hi, 1.0)
    inv_lo = round_down(1.0 / safe_hi)
    inv_hi = round_up(1.0 / safe_lo)
    inv_lo = np.where(removed, inv_lo, 0.0)
    inv_hi = np.where(removed, inv_hi, 0.0)
    chi = f.scale_elementwise(zero, zero, inv_lo, inv_hi)
    chi = HomoPoly(
        f.n,
        f.degree,
        *(np.where(removed, a, 0.0) for a in (chi.re_lo, chi.re_hi, chi.im_lo, chi.im_hi)),
    )
    return chi, Z


def quadratic_part(omega: Frequencies) -> HomoPoly:
    """``Z0 = sum_j i omega_j P_j Q_j``."""
    n = omega.n
    from .rigor import ComplexInterval

    terms = {}
    for j, w in enumerate(omega.omega):
        e = [0] * n
        e[j] = 1
        terms[(tuple(e), tuple(e))] = ComplexInterval(Interval.point(0.0), w)
    return HomoPoly.from_terms(n, 2, terms)


# ---------------------------------------------------------------------------
# state
# ---------------------------------------------------------------------------

@dataclass
class HamiltonianState:
    """Finite representation of the Hamiltonian after ``r`` normalization steps.

    Attributes
    ----------
    Z : dict
        Explicit normal-form terms ``Z_s`` (``Z[0]`` is the quadratic part).
    f : dict
        Explicit perturbation terms ``f_s`` for ``r < s <= R_I``.
    logF : ndarray
        ``logF[s]`` bounds ``log ||f_s||`` for ``max(r, R_I) < s <= R_II``.
    logZ : ndarray
        ``logZ[s]`` bounds ``log ||Z_s||`` for ``R_I < s <= min(r, R_II)``.
    """

    omega: Frequencies
    R_I: int
    R_II: int
    Z: dict
    f: dict
    logF: np.ndarray
    logZ: np.ndarray
    logE: float
    log_a: float
    r: int = 0
    mode: ResonanceMode = field(default_factory=ResonanceMode)
    chi_D_history: list = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.R_I <= self.R_II:
            raise ValueError("need 1 <= R_I <= R_II")

    @property
    def n(self) -> int:
        return self.omega.n

    @classmethod
    def initial(
        cls,
        omega: Frequencies,
        f_terms: dict,
        R_I: int,
        R_II: int,
        logE: float,
        log_a0: float,
        mode: ResonanceMode = ResonanceMode(),
        logF: Optional[dict] = None,
    ) -> "HamiltonianState":
        """Build ``S^(0)`` from explicit terms ``{s: HomoPoly}`` and optional majorants."""
        n = omega.n
        f = {}
        for s in range(1, R_I + 1):
            p = f_terms.get(s)
            f[s] = p if p is not None else HomoPoly.zero(n, s + 2)
            if f[s].degree != s + 2:
                raise ValueError(f"f_{s} must have degree {s + 2}")
        table = np.full(R_II + 1, ZERO_LOG)
        for s, v in (logF or {}).items():
            if R_I < s <= R_II:
                table[s] = float(v)
        for s, p in f_terms.items():
            if s > R_I and s <= R_II and not p.is_zero:
                table[s] = majorant.log_norm(p)
        return cls(
            omega=omega,
            R_I=R_I,
            R_II=R_II,
            Z={0: quadratic_part(omega)},
            f=f,
            logF=table,
            logZ=np.full(R_II + 1, ZERO_LOG),
            logE=float(logE),
            log_a=float(log_a0),
            r=0,
            mode=mode,
        )

    def copy(self) -> "HamiltonianState":
        new = copy.copy(self)
        new.Z = dict(self.Z)
        new.f = dict(self.f)
        new.logF = self.logF.copy()
        new.logZ = self.logZ.copy()
        new.chi_D_history = list(self.chi_D_history)
        return new

    # -- majorant views ------------------------------------------------------

    def log_norm_f(self, s: int) -> float:
        """Upper bound of ``log ||f_s||`` from the explicit term or the majorant."""
        if s <= self.R_I:
            p = self.f.get(s)
            return ZERO_LOG if p is None else majorant.log_norm(p)
        return float(self.logF[s])

    def log_norm_Z(self, s: int) -> float:
        if s <= self.R_I:
            p = self.Z.get(s)
            return ZERO_LOG if p is None else majorant.log_norm(p)
        return float(self.logZ[s])

    def sources(self, r: int):
        """Classes feeding the majorant recursion at step ``r``.

        ``Z_s`` for ``1 <= s < r`` and ``f_s`` for ``s >= r``; ``Z_0`` is
        excluded because its Lie series is absorbed through the homological
        equation.
        """
        s_list, v_list = [], []
        for s in range(1, r):
            v = self.log_norm_Z(s)
            if v > ZERO_LOG:
                s_list.append(s)
                v_list.append(v)
        for s in range(r, self.R_II + 1):
            v = self.log_norm_f(s)
            if v > ZERO_LOG:
                s_list.append(s)
                v_list.append(v)
        return np.array(s_list, dtype=np.int64), np.array(v_list, dtype=float)

    def summary(self) -> list:
        """The representative list ``{Z_0, ..., log a_r}`` with logs for majorant entries."""
        out = []
        for s in range(0, self.R_II + 1):
            if s <= min(self.r, self.R_I):
                out.append(("Z", s, self.Z.get(s)))
            elif s <= self.r:
                out.append(("logZ", s, float(self.logZ[s])))
            elif s <= self.R_I:
                out.append(("f", s, self.f.get(s)))
            else:
                out.append(("logF", s, float(self.logF[s])))
        out.append(("logE", None, self.logE))
        out.append(("log_a", None, self.log_a))
        return out

    # -- serialization -----------------------------------------------------------

    def to_text(self) -> str:
        """Bit-exact text checkpoint with hex-float values."""
        lines = [
            "birkhoff-state 1",
            "omega " + " ".join(f"{w.lo.hex()} {w.hi.hex()}" for w in self.omega.omega),
            f"R_I {self.R_I}",
            f"R_II {self.R_II}",
            f"r {self.r}",
            f"mode {self.mode.label()}",
            f"logE {self.logE.hex()}",
            f"log_a {self.log_a.hex()}",
        ]
        for r, d in self.chi_D_history:
            lines.append(f"D {r} {float(d).hex()}")
        for s in range(self.R_II + 1):
            if self.logF[s] != ZERO_LOG:
                lines.append(f"logF {s} {float(self.logF[s]).hex()}")
            if self.logZ[s] != ZERO_LOG:
                lines.append(f"logZ {s} {float(self.logZ[s]).hex()}")
        for tag, polys in (("Z", self.Z), ("f", self.f)):
            for s in sorted(polys):
                body = polys[s].to_text().rstrip("\n").split("\n")
                lines.append(f"poly {tag} {s} {len(body)}")
                lines.extend(body)
        lines.append("end")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "HamiltonianState":
        lines = text.split("\n")
        pos = 0

        def take():
            nonlocal pos
            if pos >= len(lines) or lines[pos] == "":
                raise ValueError(f"line {pos + 1}: unexpected end of checkpoint")
            line = lines[pos]
            pos += 1
            return line

        def fail(msg):
            raise ValueError(f"line {pos}: {msg}")

        if take() != "birkhoff-state 1":
            fail("not a state checkpoint")
        head = {}
        for key in ("omega", "R_I", "R_II", "r", "mode", "logE", "log_a"):
            parts = take().split(" ", 1)
            if parts[0] != key or len(parts) != 2:
                fail(f"expected {key}")
            head[key] = parts[1]
        try:
            ends = [float.fromhex(x) for x in head["omega"].split()]
            omega = Frequencies(tuple(Interval(ends[i], ends[i + 1]) for i in range(0, len(ends), 2)))
            R_I, R_II = int(head["R_I"]), int(head["R_II"])
            logF = np.full(R_II + 1, ZERO_LOG)
            logZ = np.full(R_II + 1, ZERO_LOG)
            hist = []
            Z, f = {}, {}
            while True:
                line = take()
                parts = line.split()
                if parts[0] == "end":
                    break
                if parts[0] == "D":
                    hist.append((int(parts[1]), float.fromhex(parts[2])))
                elif parts[0] in ("logF", "logZ"):
                    (logF if parts[0] == "logF" else logZ)[int(parts[1])] = float.fromhex(parts[2])
                elif parts[0] == "poly":
                    count = int(parts[3])
                    body = [take() for _ in range(count)]
                    p = HomoPoly.from_text("\n".join(body) + "\n")
                    (Z if parts[1] == "Z" else f)[int(parts[2])] = p
                else:
                    fail(f"unknown record {parts[0]!r}")
        except ValueError as exc:
            if str(exc).startswith("line"):
                raise
            fail(str(exc))
        except (IndexError, KeyError):
            fail("malformed record")
        return cls(
            omega=omega,
            R_I=R_I,
            R_II=R_II,
            Z=Z,
            f=f,
            logF=logF,
            logZ=logZ,
            logE=float.fromhex(head["logE"]),
            log_a=float.fromhex(head["log_a"]),
            r=int(head["r"]),
            mode=ResonanceMode.from_label(head["mode"]),
            chi_D_history=hist,
        )

    def snapshot(self) -> "NormSnapshot":
        return NormSnapshot.of(self)

    def identical(self, other: "HamiltonianState") -> bool:
        """Bitwise equality of every stored number."""
        return self.to_text() == other.to_text()


@dataclass
class NormSnapshot:
    """Log-norm view of a state: everything the remainder and time bounds read.

    It replaces explicit polynomials by their log norms, which keeps per-step
    records small enough to store for every step of a run.
    """

    omega: Frequencies
    R_I: int
    R_II: int
    r: int
    mode: ResonanceMode
    logE: float
    log_a: float
    logF: np.ndarray
    logZ: np.ndarray
    flog: dict
    zlog: dict

    @classmethod
    def of(cls, state: HamiltonianState) -> "NormSnapshot":
        flog = {s: majorant.log_norm(p) for s, p in state.f.items()}
        zlog = {s: majorant.log_norm(p) for s, p in state.Z.items() if s > 0}
        return cls(
            omega=state.omega,
            R_I=state.R_I,
            R_II=state.R_II,
            r=state.r,
            mode=state.mode,
            logE=state.logE,
            log_a=state.log_a,
            logF=state.logF.copy(),
            logZ=state.logZ.copy(),
            flog=flog,
            zlog=zlog,
        )

    @property
    def n(self) -> int:
        return self.omega.n

    def log_norm_f(self, s: int) -> float:
        if s <= self.R_I:
            return self.flog.get(s, ZERO_LOG)
        return float(self.logF[s])

    def log_norm_Z(self, s: int) -> float:
        if s <= self.R_I:
            return self.zlog.get(s, ZERO_LOG)
        return float(self.logZ[s])

    def to_lines(self) -> list:
        """Hex-float records; ``omega`` and ``mode`` are left to the enclosing file."""
        out = [f"snap {self.r} {self.R_I} {self.R_II} {self.logE.hex()} {self.log_a.hex()}"]
        for tag, table in (("f", self.flog), ("z", self.zlog)):
            for s in sorted(table):
                out.append(f"{tag} {s} {float(table[s]).hex()}")
        for tag, arr in (("F", self.logF), ("Z", self.logZ)):
            for s in np.nonzero(arr != ZERO_LOG)[0]:
                out.append(f"{tag} {int(s)} {float(arr[s]).hex()}")
        out.append("endsnap")
        return out

    @classmethod
    def from_lines(cls, lines: Sequence[str], omega: Frequencies, mode: ResonanceMode, start: int = 1):
        """Parse one record; returns ``(snapshot, lines consumed)``."""
        if not lines:
            raise ValueError(f"line {start}: unexpected end of snapshot log")
        head = lines[0].split()
        if len(head) != 6 or head[0] != "snap":
            raise ValueError(f"line {start}: expected a snapshot header")
        try:
            r, R_I, R_II = int(head[1]), int(head[2]), int(head[3])
            logE, log_a = float.fromhex(head[4]), float.fromhex(head[5])
        except ValueError as exc:
            raise ValueError(f"line {start}: {exc}") from None
        logF = np.full(R_II + 1, ZERO_LOG)
        logZ = np.full(R_II + 1, ZERO_LOG)
        flog, zlog = {}, {}
        for k, line in enumerate(lines[1:], start=1):
            parts = line.split()
            if parts == ["endsnap"]:
                snap = cls(omega, R_I, R_II, r, mode, logE, log_a, logF, logZ, flog, zlog)
                return snap, k + 1
            try:
                tag, idx, val = parts[0], int(parts[1]), float.fromhex(parts[2])
                if tag == "f":
                    flog[idx] = val
                elif tag == "z":
                    zlog[idx] = val
                elif tag == "F":
                    logF[idx] = val
                elif tag == "Z":
                    logZ[idx] = val
                else:
                    raise ValueError(f"unknown record {tag!r}")
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {start + k}: {exc}") from None
        raise ValueError(f"line {start + len(lines)}: snapshot not terminated")


# ---------------------------------------------------------------------------
# normalization steps
# ---------------------------------------------------------------------------

def normalization_step(state: HamiltonianState) -> HamiltonianState:
    """One explicit step: solve the homological equation and transform every term."""
    r = state.r + 1
    if r > state.R_I:
        raise ValueError("explicit steps are limited to r <= R_I")
    top = state.R_I + 2
    f_r = state.f[r]
    chi, Z_r = solve_homological(f_r, state.omega, state.mode)

    new_f = {s: state.f[s] for s in range(r + 1, state.R_I + 1)}

    def deposit(poly: HomoPoly):
        s = poly.degree - 2
        if poly.is_zero:
            return
        new_f[s] = new_f[s] + poly

    if not chi.is_zero:
        # Z_0 series: L^j Z0 / j! = L^(j-1) (Z_r - f_r) / j!
        h = Z_r - f_r
        for k, term in enumerate(lie_apply(chi, h, top)):
            if k >= 1:
                deposit(term.div_int(k + 1))
        for s in range(1, r):
            Zs = state.Z.get(s)
            if Zs is not None and not Zs.is_zero:
                for term in lie_apply(chi, Zs, top)[1:]:
                    deposit(term)
        for s in range(r, state.R_I + 1):
            fs = state.f[s]
            if not fs.is_zero:
                for term in lie_apply(chi, fs, top)[1:]:
                    deposit(term)

    D = chi.d_r()
    logD = log_plus(D.hi) if D.hi > 0 else ZERO_LOG
    new = state.copy()
    new.logF = majorant.iterate_majorants(state, r, logD)
    new.log_a = majorant.update_tail(state.log_a, r, logD)
    new.Z[r] = Z_r
    new.f = new_f
    new.r = r
    new.chi_D_history.append((r, logD))
    return new


def estimate_step(state: HamiltonianState) -> HamiltonianState:
    """One step beyond ``R_I`` using only majorants.

    The generating-function constant is ``(r + 2) F_r / alpha_r`` and the new
    normal-form majorant is ``F_r``.
    """
    r = state.r + 1
    if r <= state.R_I:
        raise ValueError("estimate-only steps start at R_I + 1")
    if r > state.R_II:
        raise ValueError("cannot normalize beyond R_II")
    logFr = float(state.logF[r])
    if logFr > ZERO_LOG:
        alpha = smallest_divisor(state.omega, r, state.mode)
        logG = round_up(logFr - log_minus(alpha.lo))
        logD = float(round_up(log_plus(r + 2) + logG))
    else:
        logD = ZERO_LOG
    new = state.copy()
    new.logF = majorant.iterate_majorants(state, r, logD)
    new.log_a = majorant.update_tail(state.log_a, r, logD)
    new.logZ[r] = logFr
    new.logF[r] = ZERO_LOG
    new.r = r
    new.chi_D_history.append((r, logD))
    return new


def step(state: HamiltonianState) -> HamiltonianState:
    """Advance one step, explicit while ``r <= R_I``."""
    if state.r + 1 <= state.R_I:
        return normalization_step(state)
    return estimate_step(state)


def normalize(state: HamiltonianState, target_r: int) -> HamiltonianState:
    """Run steps until ``state.r == target_r``."""
    if target_r < state.r:
        raise ValueError("target step already passed")
    if target_r > state.R_II:
        raise ValueError("cannot normalize beyond R_II")
    while state.r < target_r:
        state = step(state)
    return state


def homological_residual(f: HomoPoly, chi: HomoPoly, Z: HomoPoly, omega: Frequencies) -> HomoPoly:
    """``{chi, Z0} + f - Z`` evaluated in interval arithmetic."""
    from .polyring import poisson

    return poisson(chi, quadratic_part(omega)) + f - Z
