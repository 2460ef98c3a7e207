"""Command-line entry point: ``artscore <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 runtime or divergence
failure, 4 I/O failure.
"""

import argparse
import logging
import os
import sys

from . import dataset_builder as db
from . import evaluation as ev
from . import kvtext, pipeline
from .errors import ArtScoreError, ConfigError
from .ranker import TrainConfig, load_scorer, train

log = logging.getLogger("artscore")


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_build_dataset(args):
    cfg = db.DatasetConfig.from_file(args.config)
    manifest = db.build_dataset(cfg, args.out)
    counts = manifest.counts_by_domain()
    print(kvtext.dumps([("sequences", len(manifest))] + [(f"domain.{k}", v) for k, v in sorted(counts.items())]),
          end="")


def cmd_train(args):
    cfg = TrainConfig.from_file(args.config)
    tr, va, _ = pipeline.load_splits(args.data)
    _, report = train(tr, va, cfg, checkpoint_path=args.out)
    report_path = args.report or os.path.splitext(args.out)[0] + "-report.txt"
    kvtext.write(report_path, report.to_pairs())
    with open(os.path.splitext(report_path)[0] + ".csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_csv())
    print(report.to_text(), end="")


def cmd_eval(args):
    params, _ = load_scorer(args.ckpt)
    manifest = db.load_manifest(os.path.join(args.data, f"{args.split}.txt"))
    metrics = pipeline.evaluate_scorer(params, db.load_sequences(args.data, manifest), seed=args.seed)
    _emit(kvtext.dumps([(k, repr(float(v))) for k, v in metrics.items()]), args.out)


def cmd_score(args):
    shape = tuple(int(x) for x in args.image_shape.split(","))
    rows, aggregate = pipeline.score_images(args.ckpt, args.images, shape)
    _emit(pipeline.scores_csv(rows, aggregate), args.out)


def cmd_aggregate(args):
    table = ev.read_metric_csv(args.table)
    values = ev.AGGREGATORS[args.method](table)
    lines = [f"algorithm,{args.method}:smaller"]
    lines += [f"{a},{float(v)!r}" for a, v in zip(table.algorithms, values)]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_correlate(args):
    rows = ev.correlate_table(ev.read_metric_csv(args.table), ev.read_metric_csv(args.against))
    lines = ["metric,method,rho,p_value"]
    lines += [f"{name},{method},{float(r.statistic)!r},{float(r.p_value)!r}" for name, method, r in rows]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_mcnemar(args):
    r = ev.mcnemar(args.b, args.c, corrected=args.corrected)
    print(kvtext.dumps([("method", r.method), ("chi2", repr(r.statistic)), ("p_value", repr(r.p_value))]), end="")


def cmd_ablate(args):
    config = pipeline.ExperimentConfig.from_file(args.config)
    pipeline.run_ablation_grid(config, data_dir=args.data)
    with open(os.path.join(config.out, "ablation.csv"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())


def cmd_pipeline(args):
    config = pipeline.ExperimentConfig.from_file(args.config)
    print(kvtext.dumps(pipeline.run_pipeline(config)), end="")


def build_parser():
    p = argparse.ArgumentParser(prog="artscore", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build-dataset", help="synthesize a pseudo-ranked dataset")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_build_dataset)

    s = sub.add_parser("train", help="train a scorer on a built dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="checkpoint path")
    s.add_argument("--report", help="TrainReport path (default: <ckpt>-report.txt)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="NDCG and pairwise accuracy of a checkpoint")
    s.add_argument("--data", required=True)
    s.add_argument("--ckpt", required=True)
    s.add_argument("--split", default="test", choices=("train", "val", "test"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("score", help="score images with a checkpoint")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--images", required=True, help="dataset directory or raw .f32 image shard")
    s.add_argument("--image-shape", default="16,16,3")
    s.add_argument("--out")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("aggregate", help="combine metric columns per algorithm")
    s.add_argument("--table", required=True)
    s.add_argument("--method", required=True, choices=sorted(ev.AGGREGATORS))
    s.add_argument("--out")
    s.set_defaults(func=cmd_aggregate)

    s = sub.add_parser("correlate", help="Spearman correlation against human scores")
    s.add_argument("--table", required=True)
    s.add_argument("--against", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_correlate)

    s = sub.add_parser("mcnemar", help="McNemar test on discordant counts")
    s.add_argument("--b", type=int, required=True)
    s.add_argument("--c", type=int, required=True)
    s.add_argument("--corrected", action="store_true")
    s.set_defaults(func=cmd_mcnemar)

    s = sub.add_parser("ablate", help="run the ablation grid")
    s.add_argument("--config", required=True)
    s.add_argument("--data", help="reuse an existing dataset directory")
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("pipeline", help="build, train and evaluate end to end")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ArtScoreError as exc:
        print(f"artscore: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"artscore: I/O error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, ArithmeticError) as exc:
        print(f"artscore: error: {exc}", file=sys.stderr)
        return ConfigError.exit_code if isinstance(exc, ValueError) else 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
