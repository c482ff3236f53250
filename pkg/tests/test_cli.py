"""Argument parsing and exit-code plumbing for the capax CLI."""

import argparse

import pytest

from capax.cli import build_parser, main
from capax.experiments import Report


def test_parser_defaults():
    args = build_parser().parse_args(["duality"])
    assert args.command == "duality"
    assert args.box == (-3.0, 3.0)
    assert args.h == pytest.approx(1.0 / 32.0)
    assert args.rthick is None
    assert args.p == 3.0
    assert args.seed == 0
    assert args.cases == 20
    assert args.out is None


def test_parser_overrides():
    args = build_parser().parse_args(
        ["hopf", "--box=-2,2", "--h", "0.05", "--rthick", "0.1",
         "--p", "2.5", "--tol", "1e-3", "--seed", "7", "--cases", "3",
         "--out", "run/report"])
    assert args.box == (-2.0, 2.0)
    assert args.h == 0.05
    assert args.rthick == 0.1
    assert args.p == 2.5
    assert args.tol == 1e-3
    assert args.seed == 7
    assert args.cases == 3
    assert args.out == "run/report"


def test_parser_rejects_bad_box():
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["hopf", "--box", "2,-2"])
    with pytest.raises(SystemExit):
        parser.parse_args(["hopf", "--box", "1,2,3"])


def test_parser_rejects_unknown_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["frobnicate"])


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_all_commands_have_subparsers():
    from capax.experiments import COMMANDS

    parser = build_parser()
    for name in COMMANDS:
        args = parser.parse_args([name])
        assert args.command == name


def _stub_run(monkeypatch, passed):
    captured = {}

    def fake_run(config):
        captured["config"] = config
        rep = Report("duality", {}, config.config_hash())
        rep.add(case=0, ok=passed)
        return rep

    monkeypatch.setattr("capax.cli.run_command", fake_run)
    return captured


def test_main_exit_code_pass(monkeypatch, capsys):
    captured = _stub_run(monkeypatch, passed=True)
    code = main(["duality", "--seed", "11", "--cases", "2"])
    assert code == 0
    assert captured["config"].seed == 11
    assert captured["config"].cases == 2
    out = capsys.readouterr().out
    assert "passed: True" in out


def test_main_exit_code_fail(monkeypatch, capsys):
    _stub_run(monkeypatch, passed=False)
    code = main(["duality"])
    assert code == 1
    assert "passed: False" in capsys.readouterr().out


def test_main_forwards_solver_options(monkeypatch):
    captured = _stub_run(monkeypatch, passed=True)
    main(["hopf", "--h", "0.125", "--box=-1.5,1.5", "--p", "2.0"])
    config = captured["config"]
    assert config.command == "hopf"
    assert config.h == 0.125
    assert config.box == (-1.5, 1.5)
    assert config.p == 2.0
