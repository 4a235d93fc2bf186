import math

import pytest

from reference_case import LOG_T, RHO0
from birkhoff import cli
from birkhoff.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    RunConfig,
    load_checkpoint,
    main,
    parse_config_text,
    read_checkpoint,
)

APPX_B = """\
# reference Henon-Heiles example
model = henon-heiles
omega1 = 1
omega2 = -sqrt2/2
R_I = 2
R_II = 5
rho = 1e-4
time_tail = false
"""

GRID = """\
model = henon-heiles
omega1 = 1
omega2 = -golden
R_I = 3
R_II = 12
rho_range = 2e-2 6e-2 3
"""

RESONANT = """\
model = cprtbp
mu = jupiter
mode = resonant:2
R_I = 8
R_II = 30
rho_sq = 1e-4
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_rows(path):
    lines = open(path).read().splitlines()
    return [l.split("\t") for l in lines]


class TestConfig:
    def test_parse(self):
        raw = parse_config_text("a = 1\n# note\n\nb = two words  # trailing\n")
        assert raw == {"a": "1", "b": "two words"}

    @pytest.mark.parametrize(
        "text, line",
        [("a = 1\na = 2\n", 2), ("a = 1\nnot a pair\n", 2), ("model = henon-heiles\nbogus = 3\n", None)],
    )
    def test_errors(self, text, line):
        with pytest.raises(ConfigError) as exc:
            RunConfig.from_dict(parse_config_text(text))
        if line is not None:
            assert f"line {line}" in str(exc.value)

    def test_round_trip(self):
        cfg = RunConfig.from_dict(parse_config_text(GRID))
        again = RunConfig.from_dict(parse_config_text(cfg.to_text()))
        assert again.to_text() == cfg.to_text()
        assert len(cfg.rhos) == 3
        assert cfg.rhos[0] == pytest.approx(2e-2) and cfg.rhos[-1] == pytest.approx(6e-2)

    @pytest.mark.parametrize("value", ["golden", "-golden", "sqrt2/2", "-sqrt2/2", "3/7"])
    def test_frequency_labels(self, value):
        cfg = RunConfig.from_dict(parse_config_text(f"omega2 = {value}\n"))
        assert cfg.omega2 is not None

    def test_resonant_needs_cprtbp(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(parse_config_text("mode = resonant:2\n")).validate()


class TestRuns:
    def test_reference_row(self, tmp_path):
        cfg = write(tmp_path, "b.cfg", APPX_B)
        out = str(tmp_path / "b.tsv")
        assert main(["--config", cfg, "--out", out]) == EXIT_OK
        header, row = read_rows(str(tmp_path / "b.full.tsv"))
        assert header == "rho0 rho r_opt a_r log10_R log10_Idot log10_T".split()
        vals = dict(zip(header, row))
        assert vals["r_opt"] == "3"
        assert f"{float(vals['rho0']):.4g}" == f"{RHO0:.4g}"
        assert f"{float(vals['log10_T']) * math.log(10):.6g}" == f"{LOG_T:.6g}"
        # the short report rounds to three significant digits
        short = dict(zip(*read_rows(out)))
        assert short["rho0"] == "8.16e-05"
        trend = open(tmp_path / "b.trend.dat").read().splitlines()
        assert trend[0].startswith("#") and len(trend) == 2

    def test_empty_grid(self, tmp_path):
        cfg = write(tmp_path, "e.cfg", "model = henon-heiles\nomega1 = 1\nomega2 = -golden\n")
        out = str(tmp_path / "e.tsv")
        assert main(["--config", cfg, "--out", out]) == EXIT_OK
        assert read_rows(out) == [list(cli.NONRES_HEADER)]

    def test_resonant_header(self, tmp_path, capsys):
        cfg = write(tmp_path, "r.cfg", RESONANT)
        assert main(["--config", cfg]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split("\t") == ["rho0sq", "rhostar2sq", "rhosq", "T"]
        assert len(lines) == 2 and float(lines[1].split("\t")[-1]) > 0

    def test_bad_config_exit(self, tmp_path, capsys):
        cfg = write(tmp_path, "bad.cfg", "model = henon-heiles\nR_I = many\n")
        assert main(["--config", cfg]) == EXIT_CONFIG
        assert "error" in capsys.readouterr().err

    def test_missing_arguments(self):
        assert main([]) == EXIT_CONFIG

    def test_missing_file(self, tmp_path):
        assert main(["--config", str(tmp_path / "absent.cfg")]) == EXIT_CONFIG

    def test_deterministic(self, tmp_path):
        cfg = write(tmp_path, "g.cfg", GRID)
        outs = []
        for k in range(2):
            out = str(tmp_path / f"g{k}.tsv")
            main(["--config", cfg, "--out", out])
            outs.append(open(str(tmp_path / f"g{k}.full.tsv")).read())
        assert outs[0] == outs[1]

    def test_verify_reference(self, capsys):
        assert main(["--verify-appendix-b"]) == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 5 and all(l.startswith("PASS") for l in out)


class _Interrupt(Exception):
    pass


class TestResume:
    def _interrupted_run(self, tmp_path, monkeypatch, stop_after):
        ckpt = str(tmp_path / "run.ckpt")
        cfg = write(tmp_path, "g.cfg", GRID + f"checkpoint_path = {ckpt}\n")
        real = cli.write_checkpoint
        calls = []

        def crashing(path, c, state, history):
            real(path, c, state, history)
            calls.append(len(history))
            if len(calls) == stop_after:
                raise _Interrupt

        monkeypatch.setattr(cli, "write_checkpoint", crashing)
        with pytest.raises(_Interrupt):
            main(["--config", cfg, "--out", str(tmp_path / "x.tsv")])
        monkeypatch.setattr(cli, "write_checkpoint", real)
        return cfg, ckpt

    @pytest.mark.criterion("A5")
    @pytest.mark.parametrize("stop_after", [1, 3])
    def test_resume_matches_fresh_run(self, tmp_path, monkeypatch, stop_after):
        cfg, ckpt = self._interrupted_run(tmp_path, monkeypatch, stop_after)
        _, state, history = load_checkpoint(ckpt)
        assert len(history) == stop_after and state.r == stop_after
        assert main(["--resume", ckpt, "--out", str(tmp_path / "resumed.tsv")]) == EXIT_OK
        fresh_cfg = write(tmp_path, "fresh.cfg", GRID)
        assert main(["--config", fresh_cfg, "--out", str(tmp_path / "fresh.tsv")]) == EXIT_OK
        for suffix in (".tsv", ".full.tsv", ".trend.dat"):
            a = open(tmp_path / f"resumed{suffix}").read()
            b = open(tmp_path / f"fresh{suffix}").read()
            assert a == b

    def test_resume_config_mismatch(self, tmp_path, monkeypatch):
        cfg, ckpt = self._interrupted_run(tmp_path, monkeypatch, 2)
        other = write(tmp_path, "o.cfg", GRID.replace("R_II = 12", "R_II = 13"))
        assert main(["--resume", ckpt, "--config", other]) == EXIT_CONFIG

    def test_checkpoint_is_hex(self, tmp_path, monkeypatch):
        _, ckpt = self._interrupted_run(tmp_path, monkeypatch, 2)
        text = open(ckpt).read()
        assert text.startswith(cli.CHECKPOINT_MAGIC) and "0x" in text

    @pytest.mark.parametrize("frac", [0.1, 0.5, 0.9])
    def test_truncated_checkpoint(self, tmp_path, monkeypatch, frac):
        _, ckpt = self._interrupted_run(tmp_path, monkeypatch, 2)
        lines = open(ckpt).read().splitlines()
        cut = "\n".join(lines[: int(len(lines) * frac)]) + "\n"
        with pytest.raises(ValueError, match=r"line \d+"):
            read_checkpoint(cut)
        bad = write(tmp_path, "cut.ckpt", cut)
        assert main(["--resume", bad]) == EXIT_CONFIG

    def test_not_a_checkpoint(self):
        with pytest.raises(ValueError, match="line 1"):
            read_checkpoint("hello\n")
