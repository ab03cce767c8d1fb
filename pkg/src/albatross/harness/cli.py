"""Command-line entry point.

Every subcommand takes ``--config file.json``; flags given on the command
line override keys from the file, which override the built-in defaults.
Relative output paths are placed under ``$ALBATROSS_OUTPUT_DIR`` (default:
the working directory).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from ..engine import ACTION_NAMES, BoardConfig, SimGameState, SnakeEnv, SnakeState, render
from ..learner import TabularApproximator, TrainConfig, mode_defaults, train_alphazero, train_proxy, train_response
from ..nfg import NormalFormGame
from ..rationality import ObservationRecord, estimate_temperature, likelihood_curve
from ..solvers import StepSchedule, solve_le, solve_nash_2p, solve_qse, solve_sbrle
from . import experiments as ex
from .analysis import analyze_policies
from .io import locate, read_json, read_jsonl, resolve, write_csv, write_json, write_jsonl

STAG_HUNT = [[[4, 0], [1, 2]], [[4, 1], [0, 2]]]

DEFAULTS = {
    "solve": {"game": None, "solver": "le", "tau": 1.0, "schedule": "nagurney", "max_iters": 10_000, "tol": 1e-8,
              "leader": 0, "rational": 0, "weak_temps": None, "tau_r": 10.0, "out": None},
    "estimate": {"observations": None, "tau_min": 0.0, "tau_max": 10.0, "iterations": 30, "points": 101, "out": None},
    "play": {"replay": None, "board": {}, "agents": None, "models": {}, "seed": 0, "log": "game.jsonl"},
    "train": {"kind": "proxy", "board": {}, "train": {}, "episodes": None, "seed": 0, "proxy": None, "out": "model.json"},
    "bench-solvers": {"games": 1000, "actions": 6, "tau": None, "checkpoints": [10, 100, 1000, 10_000], "seed": 0,
                      "out": "bench_solvers.csv"},
    "bench-search": {"board": {"mode": "stoch2p"}, "variants": ["duct", "exp3", "rm", "oos"], "budgets": [10, 50, 100],
                     "games": 20, "baseline_iterations": 100, "seed": 0, "out": "bench_search.csv"},
    "exploit-eval": {"board": {"width": 5, "height": 5}, "proxy": None, "response": None, "alphazero": None,
                     "budgets": [2, 8, 32, 128], "games": 100, "depth": 1, "seed": 0, "out": "exploit.csv"},
    "tournament": {"board": {}, "entrants": None, "models": {}, "games": 10, "seed": 0, "out": "tournament.csv"},
    "stability": {"board": {"width": 5, "height": 5}, "checkpoints": None, "count": 100, "epsilon": 0.05, "tau": 5.0,
                  "action": 0, "player": 0, "seed": 0, "out": "stability.csv"},
    "scenario": {"game": None, "script": "tit-for-tat", "steps": 10, "tau_min": -10.0, "tau_max": 10.0, "opening": 1,
                 "out": None},
    "analyze": {"log": None, "pair": [0, 1], "out": None},
}


def _json_arg(text):
    """Flag values that look like JSON are parsed; anything else stays a string."""
    try:
        return json.loads(text)
    except (TypeError, ValueError):
        return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="albatross", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file of options")
        for key in defaults:
            p.add_argument("--" + key.replace("_", "-"), dest=key, type=_json_arg, default=argparse.SUPPRESS)
    return parser


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    opts = json.loads(json.dumps(DEFAULTS[command]))
    if getattr(args, "config", None):
        file_opts = read_json(args.config)
        unknown = set(file_opts) - set(opts)
        if unknown:
            raise SystemExit(f"unknown config keys for {command}: {sorted(unknown)}")
        opts.update(file_opts)
    for key in DEFAULTS[command]:
        if hasattr(args, key):
            opts[key] = getattr(args, key)
    return opts


def _emit_csv(path, header, rows):
    if path:
        write_csv(resolve(path), header, rows)
        _note(f"wrote {resolve(path)}")
    else:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)


def _emit_json(path, obj):
    if path:
        write_json(resolve(path), obj)
        _note(f"wrote {resolve(path)}")
    else:
        print(json.dumps(obj, indent=2))


def _note(msg):
    """Human-readable summaries go to stderr; stdout carries data."""
    print(msg, file=sys.stderr)


def _require(opts, *keys):
    for k in keys:
        if opts.get(k) is None:
            raise SystemExit(f"missing required option --{k.replace('_', '-')}")


def _load_game(ref):
    """A JSON file path, a game document, or a nested utility tensor."""
    if isinstance(ref, dict):
        return NormalFormGame.from_dict(ref)
    if isinstance(ref, list):
        return NormalFormGame(np.array(ref, dtype=float))
    with open(locate(ref)) as f:
        return NormalFormGame.from_json(f.read())


def _load_models(refs: dict) -> dict:
    return {name: TabularApproximator.load(locate(path)) for name, path in (refs or {}).items()}


# -- subcommands ----------------------------------------------------------------

def cmd_solve(o):
    _require(o, "game")
    game = _load_game(o["game"])
    solver = o["solver"]
    if solver == "le":
        res = solve_le(game, o["tau"], StepSchedule(o["schedule"]), o["max_iters"], o["tol"])
    elif solver == "nash":
        res = solve_nash_2p(game)[0]
    elif solver == "qse":
        res = solve_qse(game, o["leader"], o["tau"])
    elif solver == "sbrle":
        weak = o["weak_temps"] if o["weak_temps"] is not None else o["tau"]
        if isinstance(weak, dict):
            weak = {int(k): v for k, v in weak.items()}
        res = solve_sbrle(game, o["rational"], weak, o["tau_r"], max_iters=o["max_iters"], tol=o["tol"])
    else:
        raise SystemExit(f"unknown solver {solver!r}")
    _emit_json(o["out"], res.to_dict())


def cmd_estimate(o):
    _require(o, "observations")
    obs = [ObservationRecord.from_dict(r) for r in read_json(locate(o["observations"]))]
    est = estimate_temperature(obs, o["tau_min"], o["tau_max"], o["iterations"])
    taus, ll = likelihood_curve(obs, o["tau_min"], o["tau_max"], o["points"])
    _note(f"tau_hat={est.tau_hat:.6g}")
    _emit_csv(o["out"], ("tau", "log_likelihood"), [(float(t), float(v)) for t, v in zip(taus, ll)])


def _state_from_record(rec) -> SimGameState:
    alive = rec.get("alive", [True] * len(rec["bodies"]))
    snakes = tuple(
        SnakeState(tuple(tuple(c) for c in body), int(h), bool(a))
        for body, h, a in zip(rec["bodies"], rec["health"], alive)
    )
    return SimGameState(snakes, frozenset(tuple(c) for c in rec["food"]), int(rec["turn"]))


def cmd_play(o):
    if o["replay"]:
        records = read_jsonl(locate(o["replay"]))
        board = BoardConfig.from_dict(o["board"])
        for rec in records:
            moves = ["-" if a is None else ACTION_NAMES[a] for a in rec["joint_action"]]
            print(f"turn {rec['turn']}  moves {moves}  rewards {rec['rewards']}")
            print(render(board, _state_from_record(rec)))
        return
    board = BoardConfig.from_dict(o["board"])
    env = SnakeEnv(board)
    specs = o["agents"] or [{"kind": "baseline", "iterations": 50}] * board.num_snakes
    agents = [ex.make_agent(s, _load_models(o["models"])) for s in specs]
    if len(agents) != board.num_snakes:
        raise SystemExit(f"{len(agents)} agents for {board.num_snakes} seats")
    totals, turns, records = ex.play_game(env, agents, int(o["seed"]), log=True)
    write_jsonl(resolve(o["log"]), records)
    _note(f"turns={turns} rewards={totals.tolist()} log={resolve(o['log'])}")


def cmd_train(o):
    board = BoardConfig.from_dict(o["board"])
    env = SnakeEnv(board)
    params = {**mode_defaults(board.mode), **o["train"]}
    if o["episodes"] is not None:
        params["episodes"] = int(o["episodes"])
    cfg = TrainConfig(**params)
    kind = o["kind"]
    if kind == "alphazero":
        model = train_alphazero(env, cfg, int(o["seed"]))
    elif kind == "proxy":
        model = train_proxy(env, cfg, int(o["seed"]))
    elif kind == "response":
        _require(o, "proxy")
        model = train_response(env, cfg, TabularApproximator.load(locate(o["proxy"])), int(o["seed"]))
    else:
        raise SystemExit(f"unknown training kind {kind!r}")
    model.save(resolve(o["out"]))
    _note(f"entries={len(model.table)} model={resolve(o['out'])}")


def cmd_bench_solvers(o):
    rows = ex.bench_solvers(o["games"], o["actions"], o["tau"], tuple(o["checkpoints"]), o["seed"])
    _emit_csv(o["out"], ("schedule", "iterations", "mean", "stderr", "n", "seconds"), rows)


def cmd_bench_search(o):
    rows = ex.bench_search(BoardConfig.from_dict(o["board"]), o["variants"], o["budgets"], o["games"],
                           o["baseline_iterations"], o["seed"])
    _emit_csv(o["out"], ("variant", "iterations", "mean", "stderr", "n"), rows)


def cmd_exploit_eval(o):
    _require(o, "proxy", "response", "alphazero")
    board = BoardConfig.from_dict(o["board"])
    models = _load_models({k: o[k] for k in ("proxy", "response", "alphazero")})
    gamma = mode_defaults(board.mode)["gamma"]
    alb = {"kind": "albatross", "proxy": "proxy", "response": "response", "depth": o["depth"], "gamma": gamma}
    az = {"kind": "alphazero", "model": "alphazero", "depth": o["depth"], "gamma": gamma}
    rep = ex.exploitability_curve(board, alb, az, o["budgets"], o["games"], o["seed"], models)
    _emit_csv(o["out"], rep.header, rep.rows)


def cmd_tournament(o):
    _require(o, "entrants")
    board = BoardConfig.from_dict(o["board"])
    elo, rows = ex.tournament(board, o["entrants"], o["games"], o["seed"], _load_models(o["models"]))
    for a, b, mean, se, n in rows:
        _note(f"{a} vs {b}: {mean:+.3f} +- {se:.3f} ({n} games)")
    _emit_csv(o["out"], ("agent", "elo"), sorted(elo.items(), key=lambda kv: -kv[1]))


def cmd_stability(o):
    env = SnakeEnv(BoardConfig.from_dict(o["board"]))
    probe = env.reset(int(o["seed"]))
    if o["checkpoints"]:
        cks = [TabularApproximator.load(locate(p)) for p in o["checkpoints"]]
    else:
        cks = ex.perturbed_checkpoints(env, probe, o["count"], o["epsilon"], seed=o["seed"])
    res = ex.nash_stability_study(env, probe, cks, o["player"], o["action"], o["tau"])
    _note(f"nash_std={res['nash_std']:.6g} logit_std={res['logit_std']:.6g}")
    rows = [(k, float(a), float(b)) for k, (a, b) in enumerate(zip(res["nash"], res["logit"]))]
    _emit_csv(o["out"], ("checkpoint", "nash_probability", "logit_probability"), rows)


def cmd_scenario(o):
    game = _load_game(o["game"] if o["game"] else STAG_HUNT)
    log = ex.repeated_matrix_scenario(game, o["script"], o["steps"], o["tau_min"], o["tau_max"], o["opening"])
    locked = ex.lock_in(log)
    _note(f"lock_in={locked}")
    keys = ("step", "p1_action", "p2_action", "tau_used", "tau_estimate", "utility")
    _emit_csv(o["out"], keys, [tuple(r[k] for k in keys) for r in log])


def cmd_analyze(o):
    _require(o, "log")
    res = analyze_policies(read_jsonl(locate(o["log"])), tuple(o["pair"]))
    res["entropy_bits"] = {str(k): v for k, v in res["entropy_bits"].items()}
    _emit_json(o["out"], res)


COMMANDS = {
    "solve": cmd_solve, "estimate": cmd_estimate, "play": cmd_play, "train": cmd_train,
    "bench-solvers": cmd_bench_solvers, "bench-search": cmd_bench_search, "exploit-eval": cmd_exploit_eval,
    "tournament": cmd_tournament, "stability": cmd_stability, "scenario": cmd_scenario, "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    COMMANDS[args.command](resolve_options(args.command, args))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
