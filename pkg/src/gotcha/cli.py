"""Command-line entry point.

Settings resolve as flags > GOTCHA_* environment variables > defaults.
Machine-readable output goes to stdout (JSON or JSON-lines); human summaries
and logs go to stderr. Exit codes: 0 success, 1 usage error, 2 data or
validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import TrainConfig, parse_schedule
from .errors import ConfigError, GotchaError
from .estimator import InteractiveFaceRetriever
from .evaluation import baseline_bounds, compare_modes, eval_rounds
from .gallery import gen_synthetic, ingest_jsonl, load_packed, save_packed, split
from .seeding import stream
from .training import load_checkpoint, save_checkpoint, train
from .witness import MODES


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _env(name: str, cast, fallback):
    raw = os.environ.get(f"GOTCHA_{name}")
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad GOTCHA_{name}={raw!r}: {exc}") from exc


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(obj) -> None:
    print(json.dumps(obj), flush=True)


def build_parser() -> _Parser:
    parser = _Parser(prog="gotcha", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def add_train_flags(p, with_epochs=True):
        p.add_argument("--rounds", type=int, default=_env("ROUNDS", int, 5),
                       help="dialog rounds T (default 5)")
        p.add_argument("--margin", type=float, default=_env("MARGIN", float, 2.0),
                       help="triplet margin m (default 2.0)")
        p.add_argument("--lr", type=float, default=_env("LR", float, 0.001),
                       help="Adam learning rate (default 0.001)")
        p.add_argument("--k", type=int, default=_env("K", int, 10),
                       help="top-K scan size (default 10)")
        p.add_argument("--batch", type=int, default=_env("BATCH", int, 32),
                       help="episodes per optimizer step (default 32)")
        p.add_argument("--mode", choices=MODES,
                       default=_env("MODE", str, "progressive"),
                       help="disclosure mode (default progressive)")
        p.add_argument("--schedule", type=parse_schedule,
                       default=_env("SCHEDULE", parse_schedule, None),
                       help="masked proportions per round "
                            "(default 0.5,0.3,0.2,0.1,0.0)")
        p.add_argument("--hidden-dim", type=int, default=None,
                       help="GRU state size (default: feature dimension)")
        p.add_argument("--allow-repeats", action="store_true",
                       help="let the scan return already-shown candidates")
        p.add_argument("--resample-mask", action="store_true",
                       help="redraw masked positions per round instead of nesting")
        if with_epochs:
            p.add_argument("--epochs", type=int, default=_env("EPOCHS", int, 10))
            p.add_argument("--episodes-per-epoch", type=int, default=None,
                           help="default: one episode per training record")

    gen = sub.add_parser("gen-synthetic", help="generate a synthetic gallery")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--attrs", type=int, default=_env("ATTRS", int, 40))
    gen.add_argument("--feat-dim", type=int, default=_env("FEAT_DIM", int, 256))
    gen.add_argument("--noise", type=float, default=_env("NOISE", float, 0.05))
    gen.add_argument("--seed", type=int, default=_env("SEED", int, 0))
    gen.add_argument("--out", required=True)

    ing = sub.add_parser("ingest", help="convert JSONL records to the packed format")
    ing.add_argument("--in", dest="input", required=True)
    ing.add_argument("--out", required=True)
    ing.add_argument("--normalize", action="store_true",
                     help="L2-normalize features at ingestion (default off)")

    tr = sub.add_parser("train", help="train the dialog model")
    tr.add_argument("--gallery", required=True)
    add_train_flags(tr)
    tr.add_argument("--seed", type=int, default=_env("SEED", int, 0))
    tr.add_argument("--train-fraction", type=float,
                    default=_env("TRAIN_FRACTION", float, 0.8))
    tr.add_argument("--eval-episodes", type=int, default=200,
                    help="held-out episodes per epoch metric (0 disables)")
    tr.add_argument("--resume", default=None, help="checkpoint to continue from")
    tr.add_argument("--out", required=True, help="checkpoint output path")

    ev = sub.add_parser("eval", help="evaluate a checkpoint with the simulated witness")
    ev.add_argument("--gallery", required=True)
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--episodes", type=int, default=1000)
    ev.add_argument("--mode", choices=MODES, default=None,
                    help="override the checkpoint's disclosure mode")
    ev.add_argument("--k", type=int, default=None,
                    help="override the checkpoint's top-K scan size")
    ev.add_argument("--allow-repeats", action="store_true",
                    help="let the scan return already-shown candidates")
    ev.add_argument("--seed", type=int, default=_env("SEED", int, 0))
    ev.add_argument("--split", choices=("train", "test", "all"), default="test")
    ev.add_argument("--train-fraction", type=float,
                    default=_env("TRAIN_FRACTION", float, 0.8))
    ev.add_argument("--report", default=None, help="also write the report here")

    ba = sub.add_parser("baseline", help="attribute-matching baseline bounds")
    ba.add_argument("--gallery", required=True)
    ba.add_argument("--flip-prob", type=float, default=0.0,
                    help="per-attribute classifier error (default 0 = oracle)")
    ba.add_argument("--targets", type=int, default=1000,
                    help="sampled targets (capped at gallery size)")
    ba.add_argument("--seed", type=int, default=_env("SEED", int, 0))
    ba.add_argument("--split", choices=("train", "test", "all"), default="all")
    ba.add_argument("--train-fraction", type=float,
                    default=_env("TRAIN_FRACTION", float, 0.8))
    ba.add_argument("--report", default=None)

    cp = sub.add_parser("compare", help="train and compare the disclosure modes")
    cp.add_argument("--gallery", required=True)
    cp.add_argument("--seeds", required=True,
                    help="comma-separated training seeds, e.g. 1,2,3,4,5")
    add_train_flags(cp)
    cp.add_argument("--train-fraction", type=float,
                    default=_env("TRAIN_FRACTION", float, 0.8))
    cp.add_argument("--eval-episodes", type=int, default=200)
    cp.add_argument("--report", default=None)

    si = sub.add_parser("simulate", help="print one dialog transcript")
    si.add_argument("--ckpt", required=True)
    si.add_argument("--gallery", required=True)
    si.add_argument("--target-id", default=None)
    si.add_argument("--seed", type=int, default=_env("SEED", int, 0))

    se = sub.add_parser("serve", help="run the HTTP session service")
    se.add_argument("--ckpt", required=True)
    se.add_argument("--gallery", required=True)
    se.add_argument("--addr", default=_env("ADDR", str, "127.0.0.1:8000"))
    se.add_argument("--asset-dir", default=None)
    se.add_argument("--ttl", type=float, default=30 * 60,
                    help="idle session lifetime in seconds")

    return parser


def _pick_view(gallery, which: str, train_fraction: float):
    if which == "all":
        return gallery
    train_view, test_view = split(gallery, train_fraction)
    return train_view if which == "train" else test_view


def _config_from_args(args, seed: int) -> TrainConfig:
    return TrainConfig(
        rounds=args.rounds,
        margin=args.margin,
        lr=args.lr,
        k=args.k,
        batch_size=args.batch,
        epochs=getattr(args, "epochs", 0),
        episodes_per_epoch=getattr(args, "episodes_per_epoch", None),
        seed=seed,
        mode=args.mode,
        schedule=args.schedule,
        hidden_dim=args.hidden_dim,
        exclude_shown=not args.allow_repeats,
        resample_mask=args.resample_mask,
    )


def cmd_gen_synthetic(args) -> int:
    g = gen_synthetic(args.n, args.attrs, args.feat_dim, args.noise, args.seed)
    save_packed(g, args.out)
    _say(f"wrote {len(g)} records (A={g.n_attrs}, F={g.n_features}) to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    g = ingest_jsonl(args.input, normalize=args.normalize)
    save_packed(g, args.out)
    _say(f"ingested {len(g)} records (A={g.n_attrs}, F={g.n_features}) to {args.out}")
    return 0


def cmd_train(args) -> int:
    gallery = load_packed(args.gallery)
    cfg = _config_from_args(args, args.seed)
    train_view, test_view = split(gallery, args.train_fraction)
    resume = load_checkpoint(args.resume) if args.resume else None

    eval_fn = None
    if args.eval_episodes > 0 and len(test_view) >= 2:
        def eval_fn(params, epoch):
            report = eval_rounds(
                params, test_view, cfg, episodes=args.eval_episodes,
                seed=cfg.seed, scope=("train-eval", epoch),
            )
            return report.percentile_by_round

    ckpt, metrics = train(train_view, cfg, resume=resume, eval_fn=eval_fn, log=_emit)
    save_checkpoint(ckpt, args.out)
    _say(f"saved checkpoint after epoch {ckpt.epoch} to {args.out}")
    return 0


def cmd_eval(args) -> int:
    gallery = load_packed(args.gallery)
    ckpt = load_checkpoint(args.ckpt)
    view = _pick_view(gallery, args.split, args.train_fraction)
    cfg = ckpt.config
    overrides = {}
    if args.mode is not None and args.mode != cfg.mode:
        overrides["mode"] = args.mode
    if args.k is not None:
        overrides["k"] = args.k
    if args.allow_repeats:
        overrides["exclude_shown"] = False
    if overrides:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), **overrides})
    report = eval_rounds(ckpt.params, view, cfg, args.episodes, args.seed)
    payload = report.to_dict()
    _emit(payload)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    _say(
        f"{args.episodes} episodes, round percentiles: "
        + ", ".join(f"{v:.2f}" for v in report.percentile_by_round)
    )
    return 0


def cmd_baseline(args) -> int:
    gallery = load_packed(args.gallery)
    view = _pick_view(gallery, args.split, args.train_fraction)
    n_targets = min(args.targets, len(view))
    rng = stream(args.seed, "baseline-targets")
    targets = rng.choice(len(view), size=n_targets, replace=False)
    rows = np.array(
        [baseline_bounds(view, int(t), args.flip_prob, args.seed) for t in targets]
    )
    payload = {
        "targets": int(n_targets),
        "flip_prob": args.flip_prob,
        "upper_mean": float(rows[:, 0].mean()),
        "lower_mean": float(rows[:, 1].mean()),
        "expectation_mean": float(rows[:, 2].mean()),
    }
    _emit(payload)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    _say(
        f"baseline over {n_targets} targets: upper {payload['upper_mean']:.2f}, "
        f"lower {payload['lower_mean']:.2f}, "
        f"expectation {payload['expectation_mean']:.2f}"
    )
    return 0


def cmd_compare(args) -> int:
    gallery = load_packed(args.gallery)
    try:
        seeds = [int(s) for s in args.seeds.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --seeds {args.seeds!r}") from exc
    cfg = _config_from_args(args, seeds[0])
    train_view, test_view = split(gallery, args.train_fraction)
    table = compare_modes(train_view, test_view, cfg, seeds, args.eval_episodes)
    _emit(table)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(table, fh, indent=2)
    for mode, row in table.items():
        _say(
            f"{mode:>13}: round percentiles "
            + ", ".join(
                f"{m:.1f}±{s:.1f}"
                for m, s in zip(row["percentile_mean"], row["percentile_std"])
            )
        )
    return 0


def cmd_simulate(args) -> int:
    gallery = load_packed(args.gallery)
    ckpt = load_checkpoint(args.ckpt)
    est = InteractiveFaceRetriever.from_checkpoint(ckpt)
    try:
        result = est.run_episode(gallery, target_id=args.target_id, seed=args.seed)
    except KeyError as exc:
        raise ConfigError(f"unknown target id: {exc}") from exc
    print(f"target: {result['target_id']}")
    prev = None
    dips = []
    for row in result["rounds"]:
        flag = "  <-- match" if row["matched"] else ""
        print(
            f"round {row['round']}: candidate {row['candidate_id']}  "
            f"matched-attrs {row['matched_attributes']}/{gallery.n_attrs}  "
            f"percentile {row['percentile']:.2f}{flag}"
        )
        if (
            prev is not None
            and row["matched_attributes"] < prev["matched_attributes"]
            and row["percentile"] > prev["percentile"]
        ):
            dips.append(row["round"])
        prev = row
    print(f"matched: {result['matched']}")
    for r in dips:
        print(
            f"note: matched-attribute count dipped at round {r} while the "
            f"target's rank improved; feature similarity can outweigh raw "
            f"attribute counts"
        )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionEngine, build_app

    gallery = load_packed(args.gallery)
    ckpt = load_checkpoint(args.ckpt)
    engine = SessionEngine(ckpt, gallery, ttl_seconds=args.ttl, asset_dir=args.asset_dir)
    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bad --addr {args.addr!r}, expected host:port")
    app = build_app(engine)
    _say(f"serving {len(gallery)} records on {args.addr}")
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


_COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
    "serve": cmd_serve,
}


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _say(f"error: {exc}")
        parser.print_help(sys.stderr)
        return 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except GotchaError as exc:
        _say(f"error: {exc}")
        return 2
    except FileNotFoundError as exc:
        _say(f"error: {exc}")
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
