"""Command-line entry points.

Commands: gen (game generation and girth pruning), reduce (instance
construction), certify (full certification chain), gap (single report or
sweep with a delimited table and a figure), lp-check (randomized
cut-form versus flow-form agreement), selftest (fast smoke battery).

Every command is a pure function of its input files, flags, and seed;
re-runs produce byte-identical outputs. Exit codes: 0 success (including
a certified FAIL), 1 internal error, 2 validation error; --assert-pass
turns FAIL into exit 3 for CI use.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .algebra import rs_code_generate
from .lasserre_core import GroundSet, check_union_lemmas, mixture_lift
from .projection_games import (
    GameParams,
    InvalidParams,
    ProjectionGame,
    generate_planted,
    generate_random,
    girth,
    girth_prune,
    read_game,
    write_game,
)
from .projection_sdp import (
    check_pair_zero,
    local_distribution_solution,
    pair_id,
    verify_projection_sdp,
)
from .reductions import (
    EmptyLabelSet,
    GirthTooSmall,
    InvalidK,
    NotASolution,
    StructureViolation,
    build_directed_spanner,
    build_dsn,
    build_slsn,
    build_undirected_spanner,
    check_path_structure,
    read_instance,
    write_instance,
)
from .relaxations import flow_extension, lp_feasible_cutform
from .gap_pipeline import (
    CapExceeded,
    ClosedFormMismatch,
    DepthInsufficient,
    ProvenanceMismatch,
    build_fractional,
    canonical_json,
    fractional_objective,
    gap_report,
    instance_digest,
    solve_integral,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_ASSERT = 3

_VALIDATION_ERRORS = (
    InvalidParams,
    InvalidK,
    GirthTooSmall,
    NotASolution,
    StructureViolation,
    EmptyLabelSet,
    DepthInsufficient,
    ClosedFormMismatch,
    ProvenanceMismatch,
    FileNotFoundError,
    IsADirectoryError,
    ValueError,
    KeyError,
)

_SUPPORT_WEIGHTS = {
    1: (Fraction(1),),
    2: (Fraction(1, 2), Fraction(1, 2)),
    3: (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)),
}

_BUILDERS = {
    "directed": lambda game, k: build_directed_spanner(game, k),
    "basic": lambda game, k: build_undirected_spanner(game, k),
    "dsn": lambda game, k: build_dsn(game),
    "slsn": lambda game, k: build_slsn(game),
}

# frozen sweep points: every right vertex covered, planted optimum exact
_SWEEPS = {
    "dsn-small": (
        {"kind": "dsn", "m": 2, "n": 2, "K": 2, "q": 3, "D": 1, "seed": 1},
        {"kind": "dsn", "m": 2, "n": 3, "K": 2, "q": 3, "D": 1, "seed": 3},
        {"kind": "dsn", "m": 3, "n": 3, "K": 2, "q": 3, "D": 1, "seed": 1},
    ),
}


@dataclass
class RunConfig:
    """Validated run description: the command, its parameters, and the
    file paths it reads and writes."""

    command: str
    params: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def require(self, *names: str) -> None:
        missing = [n for n in names if self.params.get(n) is None and self.paths.get(n) is None]
        if missing:
            raise InvalidParams(f"{self.command}: missing required {', '.join('--' + n for n in missing)}")


# --- assignment sidecar files ------------------------------------------------


def write_assignment(assignment: dict, q: int, D: int) -> str:
    def order(v: str):
        return (v[0], int(v[1:]))

    lines = [f"assignment q={q} D={D}"]
    lines += [f"{v} {assignment[v]}" for v in sorted(assignment, key=order)]
    return "\n".join(lines) + "\n"


def read_assignment(text: str) -> tuple[dict, int, int]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("assignment "):
        raise ValueError("not an assignment file")
    header = dict(tok.split("=") for tok in lines[0].split()[1:])
    assignment = {}
    for raw in lines[1:]:
        v, lab = raw.split()
        assignment[v] = int(lab)
    return assignment, int(header["q"]), int(header["D"])


# --- path catalog cache ------------------------------------------------------


def _cache_file(inst) -> Path | None:
    root = os.environ.get("LIFTGAP_CACHE_DIR")
    if not root:
        return None
    return Path(root) / f"{instance_digest(inst)}.paths.json"


def load_path_cache(inst) -> int:
    f = _cache_file(inst)
    if f is None or not f.exists():
        return 0
    data = json.loads(f.read_text())
    for key, paths in data.items():
        u, v = key.split(" ")
        inst._path_cache[(u, v)] = tuple(tuple(P) for P in paths)
    return len(data)


def save_path_cache(inst) -> None:
    f = _cache_file(inst)
    if f is None:
        return
    f.parent.mkdir(parents=True, exist_ok=True)
    data = {
        f"{u} {v}": [list(P) for P in paths]
        for (u, v), paths in sorted(inst._path_cache.items())
    }
    f.write_text(json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n")


# --- shared loading ----------------------------------------------------------


def _load_game(config: RunConfig) -> ProjectionGame:
    game = read_game(Path(config.paths["game"]).read_text())
    return game


def _load_solution(config: RunConfig, game: ProjectionGame, r: int):
    """Local distribution from the planted assignment's shift orbit."""
    from .projection_games import shift_orbit

    assignment, q, D = read_assignment(Path(config.paths["assignment"]).read_text())
    game.params.setdefault("q", q)
    game.params.setdefault("D", D)
    members = config.params.get("support")
    if members is None:
        members = min(3, q)  # as many orbit members as the field allows
    if members not in _SUPPORT_WEIGHTS:
        raise InvalidParams(f"--support must be 1, 2 or 3, got {members}")
    orbit = shift_orbit(game, assignment)[:members]
    if len(orbit) < members:
        raise InvalidParams(f"orbit has only {len(orbit)} members")
    support = list(zip(orbit, _SUPPORT_WEIGHTS[members]))
    return local_distribution_solution(game, support, r)


def _build_instance(config: RunConfig, game: ProjectionGame):
    kind = config.params["kind"]
    if kind not in _BUILDERS:
        raise InvalidParams(f"unknown kind {kind!r}")
    if kind in ("directed", "basic"):
        config.require("k")
    inst = _BUILDERS[kind](game, config.params.get("k"))
    load_path_cache(inst)
    return inst


def _emit(config: RunConfig, name: str, text: str) -> None:
    out = config.paths.get(name)
    if out:
        Path(out).write_text(text)


# --- commands ----------------------------------------------------------------


def cmd_gen(config: RunConfig) -> int:
    mode = config.params["mode"]
    if mode in ("planted", "random"):
        config.require("n", "m", "K", "q", "D", "seed", "out")
        params = GameParams(
            n=config.params["n"],
            m=config.params["m"],
            K=config.params["K"],
            q=config.params["q"],
            D=config.params["D"],
            eps=config.params.get("eps"),
        )
        seed = config.params["seed"]
        if mode == "planted":
            game, assignment = generate_planted(params, seed)
            sidecar = config.paths.get("assignment_out") or config.paths["out"] + ".assignment"
            Path(sidecar).write_text(write_assignment(assignment, params.q, params.D))
        else:
            game = generate_random(params, seed)
        Path(config.paths["out"]).write_text(write_game(game))
        print(
            f"gen {mode}: n={params.n} m={params.m} K={params.K} q={params.q} "
            f"D={params.D} seed={seed} edges={len(game.edges)} -> {config.paths['out']}"
        )
        return EXIT_OK
    config.require("game", "k", "out")
    game = _load_game(config)
    before = girth(game)
    pruned = girth_prune(game, config.params["k"])
    after = girth(pruned)
    Path(config.paths["out"]).write_text(write_game(pruned))
    fmt = lambda g: "inf" if math.isinf(g) else str(int(g))
    print(
        f"gen prune: girth {fmt(before)} -> {fmt(after)}, edges "
        f"{len(game.edges)} -> {len(pruned.edges)} -> {config.paths['out']}"
    )
    return EXIT_OK


def cmd_reduce(config: RunConfig) -> int:
    config.require("game", "kind", "out")
    kind = config.params["kind"]
    if kind in ("directed", "basic") and config.params.get("k") is None:
        raise InvalidParams("spanner kinds need --k")
    game = _load_game(config)
    inst = _BUILDERS[kind](game, config.params.get("k"))
    Path(config.paths["out"]).write_text(write_instance(inst))
    counts = " ".join(f"{c}={len(ids)}" for c, ids in sorted(inst.classes().items()))
    extra = f" L={inst.L_bound}" if inst.kind == "slsn" else ""
    print(
        f"reduce {inst.kind}:{extra} vertices={len(inst.vertices)} "
        f"edges={len(inst.edges)} demands={len(inst.demands)} {counts} -> {config.paths['out']}"
    )
    return EXIT_OK


def _lp_pair_section(inst, seed: int, samples: int = 3) -> dict:
    """Cut-form and flow-form feasibility on random rational weights must
    agree demand by demand with equal optima (strong duality)."""
    if len(inst.demands) > 40:
        return {"checked": False, "note": "instance too large; use lp-check"}
    rng = np.random.default_rng(seed)
    agreements = 0
    for _ in range(samples):
        x = {
            e: Fraction(int(rng.integers(0, 4)), int(rng.integers(1, 5)))
            for e in inst.edge_ids
        }
        cut = lp_feasible_cutform(inst, x)
        flow = flow_extension(inst, x)
        assert cut["feasible"] == flow.feasible
        for demand in inst.demands:
            assert cut["optima"][demand] == flow.values[demand]
        agreements += 1
    return {"checked": True, "trials": samples, "agreements": agreements}


def _perturbed_solution(proj):
    """Negative control: force one off-projection pair set to 1/2; the
    inconsistency-zero check must then fail with a witness."""
    game = proj.game
    i, j = game.edges[0]
    allowed = set(game.projections[(i, j)])
    bad = next(
        (a, b)
        for a in range(1, game.sigma + 1)
        for b in range(1, game.sigma + 1)
        if (a, b) not in allowed
    )
    key = tuple(sorted((pair_id(game.left_name(i), bad[0]), pair_id(game.right_name(j), bad[1]))))
    from .lasserre_core import LasserreVector

    bent = LasserreVector(
        ground=proj.vector.ground,
        level=proj.vector.level,
        values={key: Fraction(1, 2)},
        default="zero",
        backing=proj.vector.backing,
        mixture=proj.vector.mixture,
    )
    return type(proj)(game=game, vector=bent, support=proj.support, certified=False)


def cmd_certify(config: RunConfig) -> int:
    config.require("game", "assignment", "kind", "r", "seed", "out")
    game = _load_game(config)
    r = config.params["r"]
    proj = _load_solution(config, game, r)
    inst = _build_instance(config, game)
    sections: dict = {}
    if config.flags.get("negative_control") == "perturb":
        proj = _perturbed_solution(proj)
        sections["projection_sdp"] = verify_projection_sdp(game, proj, r)
        sections["pair_zero"] = check_pair_zero(game, proj, r)
    else:
        sections["projection_sdp"] = verify_projection_sdp(game, proj, r)
        sections["pair_zero"] = check_pair_zero(game, proj, r)
        if inst.kind in ("directed-spanner", "basic-spanner"):
            sections["path_structure"] = check_path_structure(inst)
        y_prime = build_fractional(inst, proj, r)
        sections["objective"] = fractional_objective(inst, y_prime)
        sections["sdp"] = certify_sdp_with_jobs(inst, y_prime, r, config)
        sections["lp_pair"] = _lp_pair_section(inst, seed=config.params["seed"])
    save_path_cache(inst)
    passes = all(s.get("passes", True) for s in sections.values())
    certificate = {
        "version": __version__,
        "kind": inst.kind,
        "r": r,
        "support": config.params.get("support") or 1,
        "seed": config.params["seed"],
        "negative_control": config.flags.get("negative_control"),
        "instance_digest": instance_digest(inst),
        "passes": passes,
        "sections": _stringify_keys(sections),
    }
    _emit(config, "out", canonical_json(certificate) + "\n")
    print(f"certify {inst.kind} r={r}: {'PASS' if passes else 'FAIL'} -> {config.paths['out']}")
    if not passes and config.flags.get("assert_pass"):
        return EXIT_ASSERT
    return EXIT_OK


def certify_sdp_with_jobs(inst, y_prime, r: int, config: RunConfig) -> dict:
    from .relaxations import certify_spanner_sdp

    return certify_spanner_sdp(
        inst, y_prime, r, jobs=config.params.get("jobs") or 1, seed=config.params["seed"]
    )


def _stringify_keys(obj):
    if isinstance(obj, dict):
        return {
            (k if isinstance(k, str) else " ".join(map(str, k)) if isinstance(k, tuple) else str(k)):
            _stringify_keys(v)
            for k, v in obj.items()
        }
    if isinstance(obj, (list, tuple)):
        return [_stringify_keys(v) for v in obj]
    return obj


def cmd_gap(config: RunConfig) -> int:
    if config.params.get("sweep"):
        return _gap_sweep(config)
    config.require("game", "assignment", "kind", "r", "out")
    game = _load_game(config)
    r = config.params["r"]
    proj = _load_solution(config, game, r)
    inst = _build_instance(config, game)
    y_prime = build_fractional(inst, proj, r)
    cap = config.params.get("cap") or 40
    mode = config.params.get("mode") or "exact"
    try:
        bounds = solve_integral(inst, cap=cap, mode=mode)
    except CapExceeded as exc:
        print(f"warning: {exc}; falling back to bounds-only report")
        bounds = solve_integral(inst, cap=cap, mode="bounds")
    save_path_cache(inst)
    report = gap_report(inst, y_prime, bounds, seed=config.params.get("seed"))
    _emit(config, "out", canonical_json(report) + "\n")
    if "ratio" in report:
        print(f"gap {inst.kind}: fractional={report['fractional']['summed']} "
              f"optimum={bounds['optimum']} ratio={report['ratio']} -> {config.paths['out']}")
    else:
        rb = report["ratio_bounds"]
        print(f"gap {inst.kind}: fractional={report['fractional']['summed']} "
              f"ratio in [{rb['lower']}, {rb['upper']}] -> {config.paths['out']}")
    return EXIT_OK


def _gap_sweep(config: RunConfig) -> int:
    name = config.params["sweep"]
    if name not in _SWEEPS:
        raise InvalidParams(f"unknown sweep {name!r}; have {sorted(_SWEEPS)}")
    config.require("out_dir")
    out_dir = Path(config.paths["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for point in _SWEEPS[name]:
        params = GameParams(
            n=point["n"], m=point["m"], K=point["K"], q=point["q"], D=point["D"]
        )
        game, assignment = generate_planted(params, point["seed"])
        from .projection_games import shift_orbit

        orbit = shift_orbit(game, assignment)[:3]
        proj = local_distribution_solution(
            game, list(zip(orbit, _SUPPORT_WEIGHTS[3])), 1
        )
        inst = _BUILDERS[point["kind"]](game, None)
        load_path_cache(inst)
        y_prime = build_fractional(inst, proj, 1)
        bounds = solve_integral(inst, cap=60)
        save_path_cache(inst)
        frac = fractional_objective(inst, y_prime)["summed"]
        ratio = Fraction(bounds["optimum"]) / frac
        rows.append(
            {
                "kind": point["kind"],
                "m": point["m"],
                "n": point["n"],
                "K": point["K"],
                "q": point["q"],
                "seed": point["seed"],
                "edges": len(inst.edges),
                "fractional": frac,
                "optimum": bounds["optimum"],
                "ratio": ratio,
            }
        )
    cols = ["kind", "m", "n", "K", "q", "seed", "edges", "fractional", "optimum", "ratio"]
    lines = ["\t".join(cols)]
    for row in rows:
        lines.append("\t".join(_cell(row[c]) for c in cols))
    table = "\n".join(lines) + "\n"
    (out_dir / "sweep.tsv").write_text(table)
    _sweep_figure(rows, out_dir / "sweep.png")
    sys.stdout.write(table)
    print(f"sweep {name}: {len(rows)} points -> {out_dir}/sweep.tsv, {out_dir}/sweep.png")
    return EXIT_OK


def _cell(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return str(v)


def _sweep_figure(rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=100)
    xs = [row["edges"] for row in rows]
    ys = [float(row["ratio"]) for row in rows]
    ax.plot(xs, ys, marker="o")
    ax.axhline(1.0, linestyle="--", linewidth=0.8)
    ax.set_xlabel("instance edges")
    ax.set_ylabel("integral optimum / fractional value")
    ax.set_title("gap ratio across sweep")
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def cmd_lp_check(config: RunConfig) -> int:
    config.require("seed")
    trials = config.params.get("trials") or 100
    rng = np.random.default_rng(config.params["seed"])
    disagreements = 0
    for t in range(trials):
        n = int(rng.integers(1, 3))
        params = GameParams(n=n, m=1, K=1, q=2, D=1)
        game, _ = generate_planted(params, seed=int(rng.integers(0, 2**31)))
        inst = build_dsn(game) if rng.integers(0, 2) else build_slsn(game)
        x = {
            e: Fraction(int(rng.integers(0, 4)), int(rng.integers(1, 5)))
            for e in inst.edge_ids
        }
        cut = lp_feasible_cutform(inst, x)
        flow = flow_extension(inst, x)
        same = cut["feasible"] == flow.feasible and all(
            cut["optima"][d] == flow.values[d] for d in inst.demands
        )
        if not same:
            disagreements += 1
    summary = {
        "trials": trials,
        "disagreements": disagreements,
        "seed": config.params["seed"],
    }
    _emit(config, "out", canonical_json(summary) + "\n")
    print(f"lp-check: trials={trials} disagreements={disagreements}")
    if disagreements and config.flags.get("assert_pass"):
        return EXIT_ASSERT
    return EXIT_OK


def cmd_selftest(config: RunConfig) -> int:
    failures = []

    def run(name: str, fn) -> None:
        try:
            fn()
            print(f"selftest {name}: ok")
        except Exception as exc:  # noqa: BLE001 - report and continue
            failures.append(name)
            print(f"selftest {name}: FAIL ({exc})")

    def rs_distance():
        code = rs_code_generate(3, 1)
        assert code.min_distance() == 2

    def union_lemmas():
        ground = GroundSet("abcde")
        y = mixture_lift(
            ground,
            2,
            [(frozenset("abc"), Fraction(1, 2)), (frozenset("abd"), Fraction(1, 2))],
        )
        assert check_union_lemmas(y, 2).passed

    def end_to_end():
        params = GameParams(n=2, m=1, K=1, q=2, D=1)
        game, assignment = generate_planted(params, seed=3)
        from .projection_games import shift_orbit
        from .relaxations import certify_spanner_sdp

        orbit = shift_orbit(game, assignment)[:2]
        proj = local_distribution_solution(game, list(zip(orbit, _SUPPORT_WEIGHTS[2])), 1)
        inst = build_dsn(game)
        y_prime = build_fractional(inst, proj, 1)
        assert certify_spanner_sdp(inst, y_prime, 1)["passes"]
        res = solve_integral(inst, cap=40)
        assert res["lp_lower_ceil"] <= res["optimum"]

    def files_roundtrip():
        params = GameParams(n=2, m=2, K=2, q=3, D=1)
        game, _ = generate_planted(params, seed=1)
        assert write_game(read_game(write_game(game))) == write_game(game)
        inst = build_dsn(game)
        assert write_instance(read_instance(write_instance(inst))) == write_instance(inst)

    def lp_pair():
        sub = RunConfig(command="lp-check", params={"seed": 0, "trials": 8})
        assert cmd_lp_check(sub) == EXIT_OK

    run("rs-distance", rs_distance)
    run("union-lemmas", union_lemmas)
    run("end-to-end", end_to_end)
    run("files-roundtrip", files_roundtrip)
    run("lp-pair", lp_pair)
    if failures:
        print(f"selftest: {len(failures)} failed")
        return EXIT_INTERNAL
    print("selftest: all ok")
    return EXIT_OK


# --- argument parsing --------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liftgap", description=__doc__)
    p.add_argument("--version", action="version", version=f"liftgap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate or prune projection games")
    mode = gen.add_mutually_exclusive_group(required=True)
    mode.add_argument("--planted", action="store_true")
    mode.add_argument("--random", action="store_true")
    mode.add_argument("--prune", action="store_true")
    gen.add_argument("--n", type=int)
    gen.add_argument("--m", type=int)
    gen.add_argument("--K", type=int)
    gen.add_argument("--q", type=int)
    gen.add_argument("--D", type=int)
    gen.add_argument("--eps", type=float)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--k", type=int, help="prune target: no cycles of length <= 2k")
    gen.add_argument("--game", help="input game file (prune mode)")
    gen.add_argument("--out", required=True)
    gen.add_argument("--assignment-out")

    red = sub.add_parser("reduce", help="build an instance from a game file")
    red.add_argument("--game", required=True)
    red.add_argument("--kind", required=True, choices=sorted(_BUILDERS))
    red.add_argument("--k", type=int)
    red.add_argument("--out", required=True)

    cert = sub.add_parser("certify", help="run the full certification chain")
    cert.add_argument("--game", required=True)
    cert.add_argument("--assignment", required=True)
    cert.add_argument("--kind", required=True, choices=sorted(_BUILDERS))
    cert.add_argument("--k", type=int)
    cert.add_argument("--r", type=int, required=True)
    cert.add_argument("--support", type=int, default=1)
    cert.add_argument("--jobs", type=int, default=1)
    cert.add_argument("--seed", type=int, required=True)
    cert.add_argument("--negative-control", choices=["perturb"])
    cert.add_argument("--assert-pass", action="store_true")
    cert.add_argument("--out", required=True)

    gap = sub.add_parser("gap", help="gap report for one instance or a sweep")
    gap.add_argument("--game")
    gap.add_argument("--assignment")
    gap.add_argument("--kind", choices=sorted(_BUILDERS))
    gap.add_argument("--k", type=int)
    gap.add_argument("--r", type=int)
    gap.add_argument("--support", type=int)
    gap.add_argument("--cap", type=int, default=40)
    gap.add_argument("--mode", choices=["exact", "bounds"], default="exact")
    gap.add_argument("--seed", type=int)
    gap.add_argument("--sweep", choices=sorted(_SWEEPS))
    gap.add_argument("--out")
    gap.add_argument("--out-dir")

    lpc = sub.add_parser("lp-check", help="randomized cut/flow agreement")
    lpc.add_argument("--seed", type=int, required=True)
    lpc.add_argument("--trials", type=int, default=100)
    lpc.add_argument("--assert-pass", action="store_true")
    lpc.add_argument("--out")

    sub.add_parser("selftest", help="fast smoke battery")
    return p


def _config_from(args: argparse.Namespace) -> RunConfig:
    params = {}
    paths = {}
    flags = {}
    path_keys = {"game", "assignment", "out", "out_dir", "assignment_out"}
    for key, val in vars(args).items():
        if key == "command" or val is None:
            continue
        if key in path_keys:
            paths[key] = val
        elif key in ("assert_pass", "negative_control", "planted", "random", "prune"):
            flags[key] = val
        else:
            params[key] = val
    config = RunConfig(command=args.command, params=params, paths=paths, flags=flags)
    if args.command == "gen":
        config.params["mode"] = next(
            m for m in ("planted", "random", "prune") if flags.get(m)
        )
    return config


_DISPATCH = {
    "gen": cmd_gen,
    "reduce": cmd_reduce,
    "certify": cmd_certify,
    "gap": cmd_gap,
    "lp-check": cmd_lp_check,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    config = _config_from(args)
    try:
        return _DISPATCH[config.command](config)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 1
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
