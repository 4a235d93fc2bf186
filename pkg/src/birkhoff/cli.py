"""Config-driven batch runs: build a model, scan radii, write TSV reports and checkpoints.

Config files hold one ``key = value`` pair per line; ``#`` starts a comment.

Exit codes
----------
0 success, 1 failed verification, 2 bad config or arguments,
3 resonance detected, 4 tail divergent for some radius, 5 safe-range abort.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import models
from .majorant import (
    NoStableRegime,
    StabilityResult,
    TailDivergence,
    optimal_scan_grid,
    resonant_scan_grid,
)
from .normalform import HamiltonianState, NormSnapshot, ResonanceError, ResonanceMode
from .rigor import Interval, SafeRangeError

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_RESONANCE = 3
EXIT_TAIL = 4
EXIT_SAFE_RANGE = 5

NONRES_HEADER = ("rho0", "rho", "r_opt", "a_r", "log10_R", "log10_Idot", "log10_T")
RES_HEADER = ("rho0sq", "rhostar2sq", "rhosq", "T")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines into a dict of strings."""
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {no}: empty key")
        if key in out:
            raise ConfigError(f"line {no}: duplicate key {key!r}")
        out[key] = value
    return out


def _frequency(text: str):
    try:
        return models.frequency(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("yes", "true", "1", "on"):
        return True
    if t in ("no", "false", "0", "off"):
        return False
    raise ConfigError(f"expected yes/no, got {text!r}")


def _floats(text: str) -> list:
    items = [x for x in text.replace(",", " ").split() if x]
    try:
        return [float(x) for x in items]
    except ValueError:
        raise ConfigError(f"cannot read numbers from {text!r}") from None


@dataclass
class RunConfig:
    """Validated run specification."""

    model: str = "henon-heiles"
    omega1: object = Fraction(1)
    omega2: object = None
    mu: str = "jupiter"
    point: str = "L4"
    mode: ResonanceMode = field(default_factory=ResonanceMode)
    R_I: int = 2
    R_II: int = 1500
    rhos: list = field(default_factory=list)
    beta: float = 0.9
    tail: bool = True
    time_tail: bool = True
    logE: float = 0.0
    log_a0: Optional[float] = None
    output_path: Optional[str] = None
    checkpoint_path: Optional[str] = None
    report_digits: int = 3
    source: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {
            "model", "omega1", "omega2", "mu", "point", "mode", "R_I", "R_II", "rho",
            "rho_range", "rho_sq", "rho_sq_range", "beta", "tail", "time_tail", "logE",
            "log_a0", "output_path", "checkpoint_path", "report_digits",
        }
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown keys: {', '.join(unknown)}")
        cfg = cls(source=dict(raw))
        cfg.model = raw.get("model", cfg.model).strip().lower()
        if cfg.model not in ("henon-heiles", "cprtbp"):
            raise ConfigError("model must be henon-heiles or cprtbp")
        if "omega1" in raw:
            cfg.omega1 = _frequency(raw["omega1"])
        if "omega2" in raw:
            cfg.omega2 = _frequency(raw["omega2"])
        cfg.mu = raw.get("mu", cfg.mu).strip()
        cfg.point = raw.get("point", cfg.point).strip().upper()
        try:
            cfg.mode = ResonanceMode.from_label(raw.get("mode", "nonresonant").strip())
            cfg.R_I = int(raw.get("R_I", cfg.R_I))
            cfg.R_II = int(raw.get("R_II", cfg.R_II))
            cfg.beta = float(raw.get("beta", cfg.beta))
            cfg.logE = float(raw.get("logE", cfg.logE))
            cfg.log_a0 = float(raw["log_a0"]) if "log_a0" in raw else None
            cfg.report_digits = int(raw.get("report_digits", cfg.report_digits))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cfg.tail = _bool(raw.get("tail", "yes"))
        cfg.time_tail = _bool(raw.get("time_tail", "yes"))
        cfg.output_path = raw.get("output_path")
        cfg.checkpoint_path = raw.get("checkpoint_path")
        cfg.rhos = _grid(raw)
        cfg.validate()
        return cfg

    def validate(self):
        if not 1 <= self.R_I <= self.R_II:
            raise ConfigError("need 1 <= R_I <= R_II")
        if any(not r > 0 for r in self.rhos):
            raise ConfigError("radii must be positive")
        if list(self.rhos) != sorted(self.rhos):
            raise ConfigError("radii must be sorted")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError("beta must lie in (0, 1)")
        if self.report_digits < 1:
            raise ConfigError("report_digits must be positive")
        if self.mode.resonant and self.model != "cprtbp":
            raise ConfigError("the resonant pipeline is only available for cprtbp")
        if self.point not in ("L4", "L5"):
            raise ConfigError("point must be L4 or L5")

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.source.items())


def _grid(raw: dict) -> list:
    keys = [k for k in ("rho", "rho_range", "rho_sq", "rho_sq_range") if k in raw]
    if len(keys) > 1:
        raise ConfigError("give exactly one of rho, rho_range, rho_sq, rho_sq_range")
    if not keys:
        return []
    key = keys[0]
    vals = _floats(raw[key])
    if key.endswith("_range"):
        if len(vals) != 3 or vals[2] != int(vals[2]) or vals[2] < 1:
            raise ConfigError(f"{key} needs 'start stop count'")
        if not (vals[0] > 0 and vals[1] > 0):
            raise ConfigError(f"{key} endpoints must be positive")
        vals = list(np.geomspace(vals[0], vals[1], int(vals[2])))
    if key.startswith("rho_sq"):
        if any(v <= 0 for v in vals):
            raise ConfigError("radii must be positive")
        vals = [math.sqrt(v) for v in vals]
    return [float(v) for v in vals]


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return RunConfig.from_dict(parse_config_text(fh.read()))


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------

def build_state(cfg: RunConfig) -> HamiltonianState:
    if cfg.model == "henon-heiles":
        return models.henon_heiles(
            cfg.omega1, cfg.omega2, R_I=cfg.R_I, R_II=cfg.R_II, logE=cfg.logE, log_a0=cfg.log_a0
        )
    return models.cprtbp_hamiltonian(cfg.mu, cfg.point, R_I=cfg.R_I, R_II=cfg.R_II, mode=cfg.mode)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = "birkhoff-checkpoint 1"


def checkpoint_text(cfg: RunConfig, state: HamiltonianState, history: Sequence[NormSnapshot]) -> str:
    conf = cfg.to_text().splitlines()
    lines = [CHECKPOINT_MAGIC, f"config {len(conf)}", *conf, f"snapshots {len(history)}"]
    for snap in history:
        lines.extend(snap.to_lines())
    lines.append("state")
    return "\n".join(lines) + "\n" + state.to_text()


def write_checkpoint(path: str, cfg: RunConfig, state: HamiltonianState, history) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(checkpoint_text(cfg, state, history))
    os.replace(tmp, path)


def read_checkpoint(text: str):
    """Parse a checkpoint into ``(config, state, history)``.

    Raises
    ------
    ValueError
        With the offending line number on any malformed or truncated input.
    """
    lines = text.split("\n")
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError("line 1: not a checkpoint file")
    pos = 1

    def header(key):
        nonlocal pos
        if pos >= len(lines):
            raise ValueError(f"line {pos + 1}: unexpected end of checkpoint")
        parts = lines[pos].split()
        if len(parts) != 2 or parts[0] != key or not parts[1].isdigit():
            raise ValueError(f"line {pos + 1}: expected '{key} <count>'")
        pos += 1
        return int(parts[1])

    n_conf = header("config")
    if pos + n_conf > len(lines):
        raise ValueError(f"line {len(lines)}: unexpected end of checkpoint")
    try:
        cfg = RunConfig.from_dict(parse_config_text("\n".join(lines[pos : pos + n_conf])))
    except ConfigError as exc:
        raise ValueError(f"line {pos + 1}: {exc}") from None
    pos += n_conf
    n_snap = header("snapshots")
    # the state block is parsed first so snapshots can borrow omega and mode
    try:
        state_at = lines.index("state", pos)
    except ValueError:
        raise ValueError(f"line {len(lines)}: missing state block") from None
    state_text = "\n".join(lines[state_at + 1 :])
    try:
        state = HamiltonianState.from_text(state_text)
    except ValueError as exc:
        msg = str(exc)
        if msg.startswith("line "):
            num, rest = msg[5:].split(":", 1)
            raise ValueError(f"line {int(num) + state_at + 1}:{rest}") from None
        raise
    history = []
    for _ in range(n_snap):
        snap, used = NormSnapshot.from_lines(lines[pos:state_at], state.omega, state.mode, pos + 1)
        history.append(snap)
        pos += used
    if pos != state_at:
        raise ValueError(f"line {pos + 1}: unexpected records before state block")
    return cfg, state, history


def load_checkpoint(path: str):
    with open(path, encoding="utf-8") as fh:
        return read_checkpoint(fh.read())


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _fmt(x: float, digits: int) -> str:
    return f"{x:.{digits - 1}e}"


def format_rows(results: Sequence, resonant: bool, digits: Optional[int]) -> str:
    """TSV text with the fixed header; ``digits=None`` writes full precision."""
    header = RES_HEADER if resonant else NONRES_HEADER
    out = ["\t".join(header)]
    for res in results:
        if isinstance(res, Exception):
            continue
        row = res.row()
        cells = []
        for key in header:
            val = row[key]
            if key == "r_opt":
                cells.append(str(int(val)))
            elif digits is None:
                cells.append(repr(float(val)))
            else:
                cells.append(_fmt(float(val), digits))
        out.append("\t".join(cells))
    return "\n".join(out) + "\n"


def trend_data(results: Sequence) -> str:
    """Gnuplot columns ``1/sqrt(rho)`` and ``log10 T``."""
    lines = ["# inv_sqrt_rho log10_T"]
    for res in results:
        if isinstance(res, StabilityResult):
            lines.append(f"{1.0 / math.sqrt(res.rho)!r} {res.log_T.logval / math.log(10.0)!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

@dataclass
class RunOutcome:
    results: list
    exit_code: int
    messages: list


def run(
    cfg: RunConfig,
    state: Optional[HamiltonianState] = None,
    history: Sequence[NormSnapshot] = (),
    out_path: Optional[str] = None,
) -> RunOutcome:
    """Execute one configured run and write its reports.

    Resumed runs pass the checkpointed ``state`` and the snapshots of the
    steps already taken; the reports are identical to an uninterrupted run.
    """
    out_path = out_path or cfg.output_path
    messages: list = []
    if not cfg.rhos:
        _write_reports(out_path, [], cfg)
        return RunOutcome([], EXIT_OK, messages)
    if state is None:
        state = build_state(cfg)
    history = list(history)
    ckpt = cfg.checkpoint_path

    def on_step(st, snap):
        history.append(snap)
        if ckpt:
            write_checkpoint(ckpt, cfg, st, history)

    scan = resonant_scan_grid if cfg.mode.resonant else optimal_scan_grid
    kwargs = dict(tail=cfg.tail, time_tail=cfg.time_tail, on_step=on_step, history=list(history))
    if cfg.mode.resonant:
        kwargs["beta"] = cfg.beta
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        results = scan(state, cfg.rhos, **kwargs)
    messages.extend(str(w.message) for w in caught)
    code = EXIT_OK
    for rho, res in zip(cfg.rhos, results):
        if isinstance(res, Exception):
            messages.append(f"rho={rho!r}: {res}")
            if isinstance(res, (NoStableRegime, TailDivergence)):
                code = EXIT_TAIL
    _write_reports(out_path, results, cfg)
    return RunOutcome(results, code, messages)


def _write_reports(out_path: Optional[str], results, cfg: RunConfig):
    resonant = cfg.mode.resonant
    text = format_rows(results, resonant, cfg.report_digits)
    if out_path is None:
        sys.stdout.write(text)
        return
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    root, ext = os.path.splitext(out_path)
    with open(f"{root}.full{ext or '.tsv'}", "w", encoding="utf-8") as fh:
        fh.write(format_rows(results, resonant, None))
    if not resonant:
        with open(f"{root}.trend.dat", "w", encoding="utf-8") as fh:
            fh.write(trend_data(results))


# ---------------------------------------------------------------------------
# golden check
# ---------------------------------------------------------------------------

REFERENCE_CASE = {
    "log_a": (0.4424676, 2.599403, 2.664144, 3.937671, 4.002009),
    "trace": (-34.71383, -39.36487, -42.15919, -41.66110),
    "r_opt": 3,
    "rho0": 0.00008165,
    "log_T": 24.92920,
}


def _sig_match(x: float, ref: float, digits: int) -> bool:
    return f"{x:.{digits - 1}e}" == f"{ref:.{digits - 1}e}"


def verify_appendix_b() -> list:
    """Run the small Hénon–Heiles example and compare with the reference values.

    Returns
    -------
    list of (name, passed, detail)
    """
    from .majorant import optimal_scan
    from .normalform import step

    state = models.henon_heiles(1, -(Interval.point(2.0).sqrt() / 2), R_I=2, R_II=5)
    checks = []
    log_a = [state.log_a]
    s = state
    for _ in range(4):
        s = step(s)
        log_a.append(s.log_a)
    ok = all(_sig_match(a, b, 5) for a, b in zip(log_a, REFERENCE_CASE["log_a"]))
    checks.append(("log a_0..a_4", ok, " ".join(f"{a:.7g}" for a in log_a)))
    # full trace to R_II so the scan's stopping rule can be compared with the argmin
    res = optimal_scan(state, 1e-4, tail=True, time_tail=False)
    trace = [v for _, v in res.trace]
    ok = len(trace) == 4 and all(_sig_match(a, b, 5) for a, b in zip(trace, REFERENCE_CASE["trace"]))
    checks.append(("remainder trace", ok, " ".join(f"{v:.7g}" for v in trace)))
    checks.append(("r_opt", res.r_opt == REFERENCE_CASE["r_opt"], str(res.r_opt)))
    checks.append(("rho0", _sig_match(res.rho0, REFERENCE_CASE["rho0"], 4), f"{res.rho0:.6g}"))
    logT = res.log_T.logval
    checks.append(("log T", _sig_match(logT, REFERENCE_CASE["log_T"], 6), f"{logT:.7g}"))
    return checks


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="birkhoff",
        description="Rigorous Birkhoff normal form estimates of effective stability times.",
    )
    p.add_argument("--config", metavar="PATH", help="flat key = value run configuration")
    p.add_argument("--resume", metavar="PATH", help="continue from a checkpoint file")
    p.add_argument("--out", metavar="PATH", help="TSV report path (default: stdout)")
    p.add_argument(
        "--verify-appendix-b",
        action="store_true",
        help="run the small Henon-Heiles reference example and compare",
    )
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verify_appendix_b:
        ok_all = True
        for name, ok, detail in verify_appendix_b():
            ok_all &= ok
            print(f"{'PASS' if ok else 'FAIL'}\t{name}\t{detail}")
        return EXIT_OK if ok_all else EXIT_VERIFY
    if not args.config and not args.resume:
        print("error: give --config, --resume or --verify-appendix-b", file=sys.stderr)
        return EXIT_CONFIG
    try:
        state, history = None, ()
        if args.resume:
            cfg, state, history = load_checkpoint(args.resume)
            if args.config:
                override = load_config(args.config)
                if override.to_text() != cfg.to_text():
                    raise ConfigError("config differs from the one stored in the checkpoint")
        else:
            cfg = load_config(args.config)
        if args.resume and cfg.checkpoint_path is None:
            cfg.checkpoint_path = args.resume
        outcome = run(cfg, state, history, args.out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResonanceError as exc:
        print(f"resonance detected: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except SafeRangeError as exc:
        print(f"safe-range abort: {exc}", file=sys.stderr)
        return EXIT_SAFE_RANGE
    for msg in outcome.messages:
        print(msg, file=sys.stderr)
    return outcome.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
