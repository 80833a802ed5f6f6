"""CLI behaviour: exit codes, listing, scenario replay, game checks."""

import pytest

from aacgka.cli import main


def test_game_list(capsys):
    assert main(["game", "--list"]) == 0
    out = capsys.readouterr().out
    assert "ri:" in out and "unlink:" in out and "kind:" in out


def test_game_run_pass(capsys):
    assert main(["game", "euf-cma", "--trials", "25", "--seed", "7"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3


def test_game_single_adversary(capsys):
    assert main(["game", "ri", "--adversary", "replay", "--trials", "4", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    assert "ri/replay" in out


def test_game_usage_errors(capsys):
    assert main(["game"]) == 2
    assert main(["game", "nope"]) == 2
    assert main(["game", "ri", "--adversary", "nope"]) == 2


def test_missing_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_scenario_file(tmp_path, capsys):
    scn = tmp_path / "t.scn"
    scn.write_text(
        "init a campus role=staff\n"
        "create a g r:campus:role=staff\n"
        "commit a\n"
        "process_all\n"
        "assert_state epoch=1 members=a\n"
    )
    assert main(["scenario", str(scn), "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "commit a" in out


def test_scenario_failure_exits_1(tmp_path, capsys):
    scn = tmp_path / "bad.scn"
    scn.write_text("init a campus role=staff\ncreate a g r:campus:role=staff\nassert_state epoch=9\n")
    assert main(["scenario", str(scn)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_scenario_missing_file_exits_2(capsys):
    assert main(["scenario", "/no/such/file.scn"]) == 2


def test_scenario_random(capsys):
    assert main(["scenario", "--random", "2", "--seed", "20"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2


def test_scenario_out_file(tmp_path, capsys):
    scn = tmp_path / "t.scn"
    scn.write_text("init a campus role=staff\ncreate a g r:campus:\n")
    log = tmp_path / "t.log"
    assert main(["scenario", str(scn), "--out", str(log)]) == 0
    assert "create a" in log.read_text()
