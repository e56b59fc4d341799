import pytest

from cli.command_handler import CommandHandler
from cli.main import parse_args


@pytest.fixture
def handler():
    return CommandHandler()


def test_presets(handler):
    assert handler.handle(parse_args(["presets"])) == 0


def test_flags_override_preset(handler, tmp_path):
    args = parse_args([
        "fit", "--preset", "karate", "--center", "3", "--iters", "15", "--stop-tol", "1e-4",
        "--out", str(tmp_path),
    ])
    config = handler.build_config(args)
    assert config.mode == "fit"
    assert config.centers == [3]
    assert config.iters == 15
    assert config.stop_tol == 1e-4
    assert config.k == 2


def test_scenario_list_flag(handler):
    args = parse_args(["experiment", "--scenario", "balanced,full", "--n", "40"])
    config = handler.build_config(args)
    assert [s.value for s in config.scenarios] == ["balanced", "full"]


def test_quick_fit(handler, tmp_path):
    args = parse_args(["fit", "--preset", "karate", "--center", "3", "--iters", "20", "--out", str(tmp_path)])
    assert handler.handle(args) == 0
    assert (tmp_path / "positions_center3.csv").exists()
    assert (tmp_path / "positions_center3.json").exists()


def test_invalid_config_exits_with_2(handler, tmp_path):
    args = parse_args(["experiment", "--n", "61", "--out", str(tmp_path)])
    assert handler.handle(args) == 2


def test_unknown_preset_exits_with_2(handler):
    assert handler.handle(parse_args(["simulate", "--preset", "nope"])) == 2


def test_bad_config_file_exits_with_2(handler, tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("learning_rate = 0.1\n", encoding="utf-8")
    assert handler.handle(parse_args(["experiment", "--config", str(path)])) == 2


def test_unknown_scenario_rejected_by_parser():
    with pytest.raises(SystemExit):
        parse_args(["experiment", "--scenario", "lopsided"])
