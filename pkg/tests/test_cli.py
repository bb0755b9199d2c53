import json
import math

import pytest

from liftgap.cli import (
    EXIT_ASSERT,
    EXIT_OK,
    EXIT_VALIDATION,
    RunConfig,
    main,
    read_assignment,
    write_assignment,
)
from liftgap.projection_games import (
    GameParams,
    generate_random,
    girth,
    read_game,
)


@pytest.fixture()
def tiny_files(tmp_path):
    game = tmp_path / "game.txt"
    rc = main([
        "gen", "--planted", "--n", "2", "--m", "1", "--K", "1", "--q", "2",
        "--D", "1", "--seed", "3", "--out", str(game),
    ])
    assert rc == EXIT_OK
    return {"game": game, "assignment": game.with_suffix(".txt.assignment")}


def cyclic_seed():
    # smallest seed whose random game has a short cycle, found by scan
    for seed in range(50):
        game = generate_random(GameParams(n=2, m=3, K=2, q=3, D=1), seed)
        if girth(game) <= 4:
            return seed
    raise AssertionError("no cyclic game found")


# --- gen ---------------------------------------------------------------------


def test_gen_planted_writes_game_and_sidecar(tiny_files):
    game = read_game(tiny_files["game"].read_text())
    assert game.m == 1 and game.n == 2
    assignment, q, D = read_assignment(tiny_files["assignment"].read_text())
    assert q == 2 and D == 1
    assert set(assignment) == {"c1", "x1", "x2"}


def test_gen_rerun_byte_identical(tmp_path, tiny_files):
    other = tmp_path / "again.txt"
    rc = main([
        "gen", "--planted", "--n", "2", "--m", "1", "--K", "1", "--q", "2",
        "--D", "1", "--seed", "3", "--out", str(other),
    ])
    assert rc == EXIT_OK
    assert other.read_text() == tiny_files["game"].read_text()
    assert other.with_suffix(".txt.assignment").read_text() == tiny_files["assignment"].read_text()


def test_gen_missing_seed_exits_2(tmp_path):
    rc = main([
        "gen", "--planted", "--n", "2", "--m", "1", "--K", "1", "--q", "2",
        "--D", "1", "--out", str(tmp_path / "g.txt"),
    ])
    assert rc == EXIT_VALIDATION


def test_gen_prune_reaches_target_girth(tmp_path):
    raw = tmp_path / "raw.txt"
    rc = main([
        "gen", "--random", "--n", "2", "--m", "3", "--K", "2", "--q", "3",
        "--D", "1", "--seed", str(cyclic_seed()), "--out", str(raw),
    ])
    assert rc == EXIT_OK
    pruned = tmp_path / "pruned.txt"
    rc = main(["gen", "--prune", "--game", str(raw), "--k", "2", "--out", str(pruned)])
    assert rc == EXIT_OK
    assert girth(read_game(pruned.read_text())) >= 6


def test_assignment_roundtrip():
    assignment = {"c1": 2, "c2": 1, "x1": 3}
    text = write_assignment(assignment, q=3, D=1)
    back, q, D = read_assignment(text)
    assert back == assignment and (q, D) == (3, 1)


# --- reduce ------------------------------------------------------------------


def test_reduce_each_kind(tmp_path, tiny_files, capsys):
    for kind, flags in [
        ("directed", ["--k", "2"]),
        ("basic", ["--k", "2"]),
        ("dsn", []),
        ("slsn", []),
    ]:
        out = tmp_path / f"{kind}.txt"
        rc = main(["reduce", "--game", str(tiny_files["game"]), "--kind", kind,
                   "--out", str(out), *flags])
        assert rc == EXIT_OK, kind
        assert out.read_text().startswith("spanner kind=")
    echoes = capsys.readouterr().out
    assert "L=3" in echoes  # slsn records its length bound
    assert "left-conn=" in echoes


def test_reduce_requires_k_for_spanners(tmp_path, tiny_files):
    rc = main(["reduce", "--game", str(tiny_files["game"]), "--kind", "directed",
               "--out", str(tmp_path / "x.txt")])
    assert rc == EXIT_VALIDATION


def test_reduce_unknown_kind_exits_2(tmp_path, tiny_files, capsys):
    rc = main(["reduce", "--game", str(tiny_files["game"]), "--kind", "nope",
               "--out", str(tmp_path / "x.txt")])
    capsys.readouterr()
    assert rc == EXIT_VALIDATION


# --- certify -----------------------------------------------------------------


def test_certify_pass_and_determinism(tmp_path, tiny_files):
    args = [
        "certify", "--game", str(tiny_files["game"]),
        "--assignment", str(tiny_files["assignment"]),
        "--kind", "dsn", "--r", "1", "--support", "2", "--seed", "0",
    ]
    out1, out2 = tmp_path / "c1.json", tmp_path / "c2.json"
    assert main(args + ["--out", str(out1)]) == EXIT_OK
    assert main(args + ["--out", str(out2)]) == EXIT_OK
    assert out1.read_text() == out2.read_text()
    cert = json.loads(out1.read_text())
    assert cert["passes"] is True
    assert cert["sections"]["sdp"]["passes"] is True
    assert cert["sections"]["pair_zero"]["passes"] is True
    assert cert["sections"]["lp_pair"]["checked"] is True


def test_certify_r2_within_caps(tmp_path, tiny_files):
    out = tmp_path / "c.json"
    rc = main([
        "certify", "--game", str(tiny_files["game"]),
        "--assignment", str(tiny_files["assignment"]),
        "--kind", "dsn", "--r", "2", "--seed", "0", "--out", str(out),
    ])
    assert rc == EXIT_OK
    assert json.loads(out.read_text())["passes"] is True


def test_certify_negative_control_fails_with_witness(tmp_path, tiny_files):
    out = tmp_path / "bad.json"
    rc = main([
        "certify", "--game", str(tiny_files["game"]),
        "--assignment", str(tiny_files["assignment"]),
        "--kind", "dsn", "--r", "1", "--seed", "0",
        "--negative-control", "perturb", "--assert-pass", "--out", str(out),
    ])
    assert rc == EXIT_ASSERT
    cert = json.loads(out.read_text())
    assert cert["passes"] is False
    assert cert["sections"]["pair_zero"]["witness"] is not None


def test_certify_spanner_structure_section(tmp_path, tiny_files):
    out = tmp_path / "c.json"
    rc = main([
        "certify", "--game", str(tiny_files["game"]),
        "--assignment", str(tiny_files["assignment"]),
        "--kind", "directed", "--k", "2", "--r", "1", "--seed", "0",
        "--out", str(out),
    ])
    assert rc == EXIT_OK
    cert = json.loads(out.read_text())
    assert cert["passes"] is True
    assert cert["sections"]["path_structure"]["passes"] is True


# --- gap ---------------------------------------------------------------------


def test_gap_single_report(tmp_path, tiny_files):
    out = tmp_path / "gap.json"
    rc = main([
        "gap", "--game", str(tiny_files["game"]),
        "--assignment", str(tiny_files["assignment"]),
        "--kind", "dsn", "--r", "1", "--out", str(out),
    ])
    assert rc == EXIT_OK
    report = json.loads(out.read_text())
    # degenerate size: one right vertex uncovered, planted beats fractional
    assert report["ratio"] == "3/4"
    assert report["integral"]["optimum"] == 3


def test_gap_cap_exceeded_falls_back_to_bounds(tmp_path, tiny_files, capsys):
    out = tmp_path / "gap.json"
    rc = main([
        "gap", "--game", str(tiny_files["game"]),
        "--assignment", str(tiny_files["assignment"]),
        "--kind", "dsn", "--r", "1", "--cap", "2", "--out", str(out),
    ])
    assert rc == EXIT_OK
    assert "warning" in capsys.readouterr().out
    report = json.loads(out.read_text())
    assert "ratio" not in report
    assert "ratio_bounds" in report


def test_gap_sweep_outputs_and_determinism(tmp_path):
    d1, d2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["gap", "--sweep", "dsn-small", "--out-dir", str(d1)]) == EXIT_OK
    assert main(["gap", "--sweep", "dsn-small", "--out-dir", str(d2)]) == EXIT_OK
    tsv = (d1 / "sweep.tsv").read_text()
    assert tsv == (d2 / "sweep.tsv").read_text()
    assert (d1 / "sweep.png").read_bytes() == (d2 / "sweep.png").read_bytes()
    rows = [ln.split("\t") for ln in tsv.strip().splitlines()]
    assert rows[0][-1] == "ratio"
    ratios = [r[-1] for r in rows[1:]]
    assert ratios == ["1/1", "1/1", "1/1"]
    sizes = [int(r[6]) for r in rows[1:]]
    assert sizes == sorted(sizes)


def test_gap_path_cache(tmp_path, tiny_files, monkeypatch):
    cache = tmp_path / "cache"
    monkeypatch.setenv("LIFTGAP_CACHE_DIR", str(cache))
    out1, out2 = tmp_path / "g1.json", tmp_path / "g2.json"
    args = [
        "gap", "--game", str(tiny_files["game"]),
        "--assignment", str(tiny_files["assignment"]),
        "--kind", "dsn", "--r", "1",
    ]
    assert main(args + ["--out", str(out1)]) == EXIT_OK
    files = list(cache.glob("*.paths.json"))
    assert len(files) == 1
    assert main(args + ["--out", str(out2)]) == EXIT_OK
    assert out1.read_text() == out2.read_text()


# --- lp-check and selftest ---------------------------------------------------


def test_lp_check_runs_clean(tmp_path):
    out = tmp_path / "lp.json"
    rc = main(["lp-check", "--seed", "5", "--trials", "10", "--out", str(out)])
    assert rc == EXIT_OK
    summary = json.loads(out.read_text())
    assert summary == {"trials": 10, "disagreements": 0, "seed": 5}


def test_lp_check_requires_seed():
    rc = main(["lp-check", "--trials", "5"])
    assert rc == EXIT_VALIDATION


def test_selftest_green(capsys):
    assert main(["selftest"]) == EXIT_OK
    assert "all ok" in capsys.readouterr().out


def test_runconfig_require():
    config = RunConfig(command="demo", params={"a": 1})
    config.require("a")
    with pytest.raises(Exception):
        config.require("missing")
