"""Command-line interface.

Commands: ``label`` (annotate a dataset against demonstrations),
``select-experts`` (pick top-return episodes), ``diagnose`` (compare
labeled vs ground-truth returns), ``demo-gridworld`` (end-to-end desk
demo). Exit codes: 0 success, 2 usage, 3 parse/data, 4 numeric, 5 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import errors
from .costs import CostKind
from .dataset_io import (
    read_dataset,
    select_top_k_experts,
    write_dataset,
    write_diagnostics,
    write_labeled,
    return_correlations,
)
from .gridworld import (
    HarnessConfig,
    load_harness_config,
    parse_post_scale,
    reference_config,
    run_demo,
)
from .labeler import LabelConfig, PostScale, ScaleMode, label_dataset
from .measures import FeatureMode
from .solver import SinkhornParams

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NUMERIC = 4
EXIT_IO = 5

_PARSE_ERRORS = (
    errors.ParseError,
    errors.DimensionMismatch,
    errors.NonFiniteValue,
    errors.RewardsMissing,
    errors.ExpertRewardsMissing,
    errors.IdMismatch,
    errors.MissingActions,
    errors.EmptyExpertSet,
    errors.EmptyDataset,
    errors.InvalidCounts,
)
_NUMERIC_ERRORS = (
    errors.MarginalMismatch,
    errors.NegativeWeight,
    errors.NonFiniteCost,
    errors.NonFiniteInput,
    errors.DegenerateReturnRange,
    errors.TooLarge,
    errors.TargetTooSmall,
)


def _build_label_config(args: argparse.Namespace) -> LabelConfig:
    if args.preset == "locomotion":
        if args.action_dim is None:
            raise ValueError("--preset locomotion requires --action-dim")
        cfg = LabelConfig.locomotion_preset(args.action_dim)
    elif args.preset == "antmaze":
        cfg = LabelConfig.antmaze_preset()
    elif args.preset == "plain":
        cfg = LabelConfig.plain_preset()
    else:
        cfg = LabelConfig()

    sink = cfg.sinkhorn
    return LabelConfig(
        cost=CostKind(args.cost) if args.cost else cfg.cost,
        features=FeatureMode(args.features) if args.features else cfg.features,
        sinkhorn=SinkhornParams(
            epsilon=args.epsilon if args.epsilon is not None else sink.epsilon,
            max_iterations=(
                args.max_iters if args.max_iters is not None else sink.max_iterations
            ),
            marginal_tolerance=sink.marginal_tolerance,
        ),
        squash_alpha=args.alpha if args.alpha is not None else cfg.squash_alpha,
        squash_beta=args.beta if args.beta is not None else cfg.squash_beta,
        squash_scale=(
            ScaleMode(args.squash_mode) if args.squash_mode else cfg.squash_scale
        ),
        episode_length=(
            args.episode_length
            if args.episode_length is not None
            else cfg.episode_length
        ),
        action_dim=args.action_dim if args.action_dim is not None else cfg.action_dim,
        post_scale=(
            parse_post_scale(args.post_scale) if args.post_scale else cfg.post_scale
        ),
    )


def cmd_label(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    unlabeled = read_dataset(args.unlabeled)
    experts = read_dataset(args.experts)
    cfg = _build_label_config(args)
    labeled = label_dataset(
        unlabeled.episodes, experts.episodes, cfg, workers=args.parallelism
    )
    write_labeled(args.out, labeled)
    elapsed = time.perf_counter() - started
    print(f"episodes labeled = {len(labeled)}")
    if labeled:
        rets = [lt.episodic_return() for lt in labeled]
        print(
            f"episodic OT return: mean = {sum(rets) / len(rets):.6g}, "
            f"min = {min(rets):.6g}, max = {max(rets):.6g}"
        )
    print(f"wall time = {elapsed:.2f} s")
    return EXIT_OK


def cmd_select_experts(args: argparse.Namespace) -> int:
    dataset = read_dataset(args.dataset)
    selected = select_top_k_experts(dataset, args.k)
    if "warning" in selected.metadata:
        print(f"warning: {selected.metadata['warning']}", file=sys.stderr)
    write_dataset(args.out, selected)
    print(f"selected {len(selected)} of {len(dataset)} episodes")
    return EXIT_OK


def _read_source_experts(path) -> dict[str, object]:
    out: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for idx, line in enumerate(l for l in fh if l.strip()):
            rec = json.loads(line)
            ep_id = rec.get("id", f"ep-{idx:05d}")
            out[str(ep_id)] = rec.get("source_expert")
    return out


def cmd_diagnose(args: argparse.Namespace) -> int:
    labeled = read_dataset(args.labeled)
    truth = read_dataset(args.truth)
    truth_by_id = {ep.id: ep for ep in truth.episodes}
    sources = _read_source_experts(args.labeled)

    rows = []
    labeled_returns = []
    truth_returns = []
    for ep in labeled.episodes:
        if ep.id not in truth_by_id:
            raise errors.IdMismatch(f"episode {ep.id!r} not present in {args.truth}")
        truth_ep = truth_by_id[ep.id]
        if truth_ep.rewards is None:
            raise errors.RewardsMissing(f"episode {ep.id!r} has no rewards in truth file")
        if ep.rewards is None:
            raise errors.RewardsMissing(f"episode {ep.id!r} has no rewards in labeled file")
        t_ret = truth_ep.episodic_return()
        l_ret = ep.episodic_return()
        rows.append((ep.id, repr(t_ret), repr(l_ret), sources.get(ep.id)))
        truth_returns.append(t_ret)
        labeled_returns.append(l_ret)

    write_diagnostics(args.out, rows)
    pearson, spearman, degenerate = return_correlations(labeled_returns, truth_returns)
    if degenerate:
        print("warning: degenerate return variance, correlations reported as 0",
              file=sys.stderr)
    print(f"episodes compared = {len(rows)}")
    print(f"pearson = {pearson:.6f}")
    print(f"spearman = {spearman:.6f}")
    return EXIT_OK


def cmd_demo_gridworld(args: argparse.Namespace) -> int:
    if args.config:
        config = load_harness_config(args.config)
    else:
        config = reference_config()
    result = run_demo(config, args.labeler)
    print(f"labeler = {result.labeler}")
    print(f"episodes labeled = {result.episodes_labeled}")
    print(f"label time = {result.label_seconds:.2f} s")
    print(
        f"fit time = {result.fit_seconds:.2f} s "
        f"({result.trained_sweeps} sweeps)"
    )
    if result.degenerate_correlation:
        print("reward correlation: degenerate (reported as 0)")
    else:
        print(
            f"reward correlation: pearson = {result.pearson:.4f}, "
            f"spearman = {result.spearman:.4f}"
        )
    print(f"success_rate = {result.success_rate}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otreward",
        description="Label episodic datasets with optimal-transport rewards.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    label = sub.add_parser("label", help="label a dataset against demonstrations")
    label.add_argument("unlabeled", help="path to the unlabeled episode file")
    label.add_argument("experts", help="path to the expert demonstration file")
    label.add_argument("out", help="path for the labeled output file")
    label.add_argument("--preset", choices=["locomotion", "antmaze", "plain"])
    label.add_argument("--cost", choices=[k.value for k in CostKind])
    label.add_argument("--features", choices=[m.value for m in FeatureMode])
    label.add_argument("--epsilon", type=float, help="entropic regularization")
    label.add_argument("--max-iters", type=int, help="Sinkhorn iteration cap")
    label.add_argument("--alpha", type=float, help="squash scale")
    label.add_argument("--beta", type=float, help="squash rate")
    label.add_argument("--squash-mode", choices=[m.value for m in ScaleMode])
    label.add_argument("--episode-length", type=int,
                       help="horizon constant for locomotion/antmaze exponents")
    label.add_argument("--action-dim", type=int,
                       help="action dimension for the locomotion exponent")
    label.add_argument("--post-scale",
                       help="none | return-range[:target] | shift:<delta>")
    label.add_argument("--parallelism", type=int, default=0,
                       help="worker processes (0 = all cores)")
    label.set_defaults(func=cmd_label)

    select = sub.add_parser("select-experts", help="pick top episodes by return")
    select.add_argument("dataset", help="path to a reward-annotated episode file")
    select.add_argument("out", help="path for the selected episodes")
    select.add_argument("--k", type=int, required=True, help="number of episodes")
    select.set_defaults(func=cmd_select_experts)

    diag = sub.add_parser("diagnose", help="compare labeled vs ground-truth returns")
    diag.add_argument("labeled", help="path to the labeled episode file")
    diag.add_argument("truth", help="path to the ground-truth episode file")
    diag.add_argument("out", help="path for the diagnostics CSV")
    diag.set_defaults(func=cmd_diagnose)

    demo = sub.add_parser("demo-gridworld", help="end-to-end gridworld demo")
    demo.add_argument("--config", help="key = value config file (default: built-in)")
    demo.add_argument(
        "--labeler",
        choices=["otr", "uds", "uniform", "truth"],
        default="otr",
    )
    demo.set_defaults(func=cmd_demo_gridworld)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except errors.DataIoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry_point() -> None:  # pragma: no cover - thin wrapper
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    entry_point()
