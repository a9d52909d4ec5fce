"""Command-line interface: ``off-fsp {gen-expert,sample,run,eval,inspect}``.

Exit codes: 0 on success, 1 on validation errors (bad config, bad files,
mismatched games), 2 on runtime failures and usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import dataset as ds
from .exceptions import OffFSPError, ValidationError
from .games import GAMES, make_game
from .off_fsp import AveragePolicyStore, OffFSPConfig, run_baseline, run_off_fsp
from .offline_rl import LearnerConfig
from .policy import load_profile, profile_to_flat, save_profile, uniform_profile
from .solver import fp_solve, nash_conv, nash_conv_flat
from .tree import get_tree

log = logging.getLogger("offfsp")


@dataclass
class ExperimentConfig:
    """One run: which game, which data, which learner.

    ``recipe`` is ``d1``, ``d2``, ``mix:<ratio>``, ``population:<size>``,
    ``exact`` (exact proportions of uniform play) or ``file:<path>``.
    """

    game: str = "rps"
    game_params: dict = field(default_factory=dict)
    recipe: str = "d1"
    n_trajectories: int = 1000
    iterations: int = 100
    learner: dict = field(default_factory=dict)
    eval_every: int = 10
    seed: int = 0
    out: str = "runs/out"
    experts: str | None = None
    baselines: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        if self.game not in GAMES:
            raise ValidationError(f"unknown game {self.game!r}; supported: {sorted(GAMES)}")
        parse_recipe(self.recipe)
        if self.n_trajectories < 1:
            raise ValidationError("n_trajectories must be >= 1")
        for b in self.baselines:
            if b not in ("bc", "qlearning", "cql", "bcq", "crr"):
                raise ValidationError(f"unknown baseline {b!r}")
        self.off_fsp_config()
        return self

    def off_fsp_config(self):
        return OffFSPConfig(
            iterations=self.iterations,
            learner=LearnerConfig.from_dict(self.learner),
            eval_every=self.eval_every,
            seed=self.seed,
        )


def parse_recipe(recipe):
    kind, _, arg = recipe.partition(":")
    if kind in ("d1", "d2", "exact") and not arg:
        return kind, None
    if kind == "mix":
        try:
            ratio = float(arg)
        except ValueError:
            raise ValidationError(f"bad mix ratio in {recipe!r}") from None
        if not 0.0 <= ratio <= 1.0:
            raise ValidationError("mix ratio must lie in [0, 1]")
        return kind, ratio
    if kind == "population":
        if not arg.isdigit() or int(arg) < 1:
            raise ValidationError(f"bad population size in {recipe!r}")
        return kind, int(arg)
    if kind == "file" and arg:
        return kind, arg
    raise ValidationError(f"unknown dataset recipe {recipe!r}; use d1, d2, exact, mix:R, population:N or file:PATH")


# -- expert checkpoints ------------------------------------------------------------


def checkpoint_path(directory, k):
    return Path(directory) / f"checkpoint_{k:04d}.json"


def load_checkpoint(directory, k, game):
    path = checkpoint_path(directory, k)
    if not path.exists():
        raise ValidationError(f"missing expert checkpoint {path}; run `off-fsp gen-expert` first")
    profile, doc = load_profile(path)
    if doc.get("game") != game.name:
        raise ValidationError(f"{path} holds a {doc.get('game')!r} policy, not {game.name!r}")
    return profile


def latest_checkpoint(directory):
    found = sorted(Path(directory).glob("checkpoint_*.json")) if directory else []
    if not found:
        raise ValidationError(f"no expert checkpoints in {directory}; run `off-fsp gen-expert` first")
    return int(found[-1].stem.split("_")[1])


def build_dataset(game, recipe, n, seed, experts=None):
    kind, arg = parse_recipe(recipe)
    if kind == "d1":
        if game.name != "rps":
            raise ValidationError("recipe d1 is defined for rps only")
        return ds.make_rps_d1(n, seed)
    if kind == "d2":
        if game.name != "rps_asym":
            raise ValidationError("recipe d2 is defined for rps_asym only")
        return ds.make_rps_d2(seed)
    if kind == "exact":
        return ds.exact_proportion_dataset(game, uniform_profile(), n, seed)
    if kind == "file":
        return ds.load(arg, game)
    if kind == "mix":
        expert = uniform_profile() if arg == 0.0 else load_checkpoint(experts, latest_checkpoint(experts), game)
        return ds.sample_mix_dataset(game, expert, uniform_profile(), arg, n, seed)
    # population: member 1 is the uniform policy, member j > 1 the (j - 1)-th expert checkpoint
    members = [uniform_profile()] + [load_checkpoint(experts, k, game) for k in range(1, arg)]
    return ds.sample_population_dataset(game, members, n, seed)


# -- subcommands ---------------------------------------------------------------


def cmd_gen_expert(args):
    game = make_game(args.game)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_profile(uniform_profile(), checkpoint_path(out, 0), game.name, {"iteration": 0})
    rows = []
    for k, profile in fp_solve(game, args.iterations, args.checkpoint_every):
        save_profile(profile, checkpoint_path(out, k), game.name, {"iteration": k})
        rows.append((k, nash_conv(game, profile).total))
        log.info("iteration %d: NashConv %.6f", k, rows[-1][1])
    _write_rows(out / "curve.csv", ["iteration", "nash_conv"], rows)
    print(f"{game.name}: {len(rows)} checkpoints in {out}, final NashConv {rows[-1][1]:.6f}")
    return 0


def cmd_sample(args):
    game = make_game(args.game)
    d = build_dataset(game, args.recipe, args.n, args.seed, args.experts)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    ds.save(d, out)
    report = ds.coverage_report(d)
    cov = Path(args.coverage) if args.coverage else out.with_suffix(".coverage.csv")
    report.to_csv(cov)
    print(
        f"wrote {len(d)} trajectories to {out}; terminal coverage {report.terminal_coverage:.4f}, "
        f"infostate-action coverage {report.infostate_action_coverage:.4f}"
    )
    return 0


def _run_one(cfg: ExperimentConfig):
    game = make_game(cfg.game, **cfg.game_params)
    d = build_dataset(game, cfg.recipe, cfg.n_trajectories, cfg.seed, cfg.experts)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(asdict(cfg), indent=1, sort_keys=True))
    result = run_off_fsp(d, cfg.off_fsp_config())
    result.report.to_csv(out / "report.csv", timing=False)
    result.report.to_csv(out / "timing.csv")
    result.store.save(out / "store.json")
    rows = [("off_fsp", cfg.off_fsp_config().learner.algorithm, result.nash_conv)]
    base = LearnerConfig.from_dict(cfg.learner)
    for name in cfg.baselines:
        _, nc = run_baseline(d, base.with_(algorithm=name), cfg.seed)
        rows.append(("bc" if name == "bc" else "single_agent", name, nc))
    _write_rows(out / "summary.csv", ["method", "algorithm", "nash_conv"], rows)
    return out, rows


def cmd_run(args):
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    for key in ("game", "recipe", "iterations", "seed", "out", "experts", "n_trajectories", "eval_every"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.algorithm:
        data.setdefault("learner", {})["algorithm"] = args.algorithm
    if args.baselines is not None:
        data["baselines"] = [b for b in args.baselines.split(",") if b]
    cfg = ExperimentConfig.from_dict(data)
    if args.seeds > 1:
        cells = [
            ExperimentConfig.from_dict({**asdict(cfg), "seed": cfg.seed + i, "out": str(Path(cfg.out) / f"seed_{cfg.seed + i}")})
            for i in range(args.seeds)
        ]
    else:
        cells = [cfg]
    if args.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_one, cells))
    else:
        results = [_run_one(c) for c in cells]
    for out, rows in results:
        for method, alg, nc in rows:
            print(f"{out}\t{method}\t{alg}\t{nc:.6f}")
    return 0


def cmd_eval(args):
    path = Path(args.file)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not JSON ({exc.msg})") from None
    if doc.get("kind") == "store":
        store = AveragePolicyStore.from_dict(doc)
        tree, flats = store.tree, store.behavior
    else:
        profile, doc = load_profile(path)
        name = args.game or doc.get("game")
        if not name:
            raise ValidationError(f"{path} does not name its game; pass --game")
        if args.game and doc.get("game") not in (None, args.game):
            raise ValidationError(f"{path} holds a {doc['game']!r} policy, not {args.game!r}")
        tree = get_tree(make_game(name, **doc.get("params", {})))
        flats = profile_to_flat(tree, profile)
    rep = nash_conv_flat(tree, flats)
    row = (tree.game.name, rep.total, *rep.per_player_gain, *rep.br_values)
    header = ["game", "nash_conv", "gain_0", "gain_1", "br_value_0", "br_value_1"]
    if args.out:
        _write_rows(args.out, header, [row])
    print(f"{tree.game.name}: NashConv {rep.total:.9f} (gains {rep.per_player_gain[0]:.9f}, {rep.per_player_gain[1]:.9f})")
    return 0


def cmd_inspect(args):
    d = ds.load(args.dataset)
    report = ds.coverage_report(d)
    lengths = np.array([len(t) for t in d.trajectories])
    returns = np.array([t.returns[0] for t in d.trajectories])
    print(f"game: {d.game.name} {d.game.params}")
    print(f"trajectories: {len(d)} (mean length {lengths.mean():.2f})")
    print(f"mean return of player 0: {returns.mean():.4f}")
    for p in (0, 1):
        print(f"tuples of player {p}: {len(ds.project(d, p))}")
    print(f"terminal coverage: {report.terminals_covered}/{report.terminals_total} ({report.terminal_coverage:.4f})")
    print(
        f"infostate-action coverage: {report.pairs_covered}/{report.pairs_total} "
        f"({report.infostate_action_coverage:.4f})"
    )
    if d.metadata:
        print(f"metadata: {json.dumps(d.metadata, sort_keys=True)}")
    if args.csv:
        report.to_csv(args.csv)
    return 0


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="off-fsp", description="Offline fictitious self-play experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-expert", help="fictitious-play expert checkpoints and NashConv curve")
    p.add_argument("--game", required=True, choices=sorted(GAMES))
    p.add_argument("--iterations", type=_positive, required=True)
    p.add_argument("--checkpoint-every", type=_positive, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_expert)

    p = sub.add_parser("sample", help="materialize a dataset recipe and its coverage report")
    p.add_argument("--game", required=True, choices=sorted(GAMES))
    p.add_argument("--recipe", required=True, help="d1 | d2 | exact | mix:R | population:N | file:PATH")
    p.add_argument("--n", type=_positive, default=1000, help="number of trajectories")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--experts", help="directory written by gen-expert (mix and population recipes)")
    p.add_argument("--out", required=True, help="dataset file (JSON Lines)")
    p.add_argument("--coverage", help="coverage CSV (default: next to the dataset)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("run", help="run Off-FSP (and baselines) from a config file")
    p.add_argument("--config", help="JSON experiment config; flags below override its keys")
    p.add_argument("--game", choices=sorted(GAMES))
    p.add_argument("--recipe")
    p.add_argument("--n-trajectories", dest="n_trajectories", type=_positive)
    p.add_argument("--iterations", type=_positive)
    p.add_argument("--eval-every", dest="eval_every", type=_positive)
    p.add_argument("--algorithm", choices=["bc", "qlearning", "cql", "bcq", "crr"])
    p.add_argument("--baselines", help="comma-separated: bc,qlearning,cql,bcq,crr")
    p.add_argument("--experts")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=_positive, default=1, help="run this many consecutive seeds")
    p.add_argument("--jobs", type=_positive, default=1, help="worker processes for multi-seed runs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="exact NashConv of a profile or store file")
    p.add_argument("file")
    p.add_argument("--game", choices=sorted(GAMES))
    p.add_argument("--out", help="CSV output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="dataset statistics and coverage")
    p.add_argument("dataset")
    p.add_argument("--csv", help="write the coverage report here")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ds.DatasetFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OffFSPError, OSError, ArithmeticError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
