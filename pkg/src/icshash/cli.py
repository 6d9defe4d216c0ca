"""Command-line driver.

Subcommands: ``centers`` (write a hash-center file), ``solve-weights``
(run the weight solver over a file of distance vectors), ``train``
(fit the encoder on a dataset), ``eval`` (retrieval metrics for a
checkpoint), ``weight-report`` (compare learned weights against
ground-truth proportions). Every command writes a JSON run manifest
listing its resolved configuration and output files. Exit codes:
0 success, 2 usage or configuration error, 3 data error, 4 violated
internal invariant.

When ``--seed`` is omitted the environment variable ``ICS_SEED`` is
used as the default seed.
"""

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .centers import generate_centers, load_centers, min_pairwise_hamming, save_centers
from .data import (
    features_matrix,
    labels_matrix,
    load_dataset,
    load_dataset_csv,
    spearman_corr,
)
from .encoder import (
    TrainConfig,
    encode_binary,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .errors import ConfigError, DataError, EvaluationError, ToolkitError
from .loss import LossConfig
from .retrieval import map_at_k, pack_database, precision_at_k, save_codes
from .weights import WeightSolverConfig, solve_weights

_FLOAT_FMT = "%.17g"


def _default_seed() -> int:
    raw = os.environ.get("ICS_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"ICS_SEED must be an integer, got {raw!r}") from None


def _write_manifest(path, command, config, seed, outputs, started):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
        "outputs": sorted(str(p) for p in outputs),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_samples(path, data_format, m_labels):
    if data_format == "csv":
        return load_dataset_csv(path, m_labels)
    return load_dataset(path)


def _cmd_centers(args) -> int:
    started = time.perf_counter()
    seed = args.seed if args.seed is not None else _default_seed()
    center_set = generate_centers(args.bits, args.labels, seed)
    save_centers(args.out, center_set)
    if center_set.m_labels >= 2:
        print(f"min-pairwise-hamming {min_pairwise_hamming(center_set)}")
    else:
        print("min-pairwise-hamming n/a")
    config = {
        "bits": args.bits,
        "labels": args.labels,
        "strategy": center_set.strategy,
        "threads": args.threads,
    }
    _write_manifest(
        f"{args.out}.manifest.json", "centers", config, seed, [args.out], started
    )
    return 0


def _cmd_solve_weights(args) -> int:
    started = time.perf_counter()
    cfg = WeightSolverConfig(
        lam=args.lam,
        eta=args.eta,
        beta=args.beta,
        max_iters=args.max_iters,
        tol=args.tol,
        gradient_mode=args.gradient_mode,
    )
    with open(args.distances) as fh:
        raw = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not raw:
        raise DataError(f"no distance vectors in {args.distances}")
    rows = []
    for i, line in enumerate(raw):
        try:
            d = np.array([float(p) for p in line.split()], dtype=np.float64)
        except ValueError:
            raise DataError(f"line {i + 1}: non-numeric distance") from None
        result = solve_weights(d, cfg)
        rows.append((i, result))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", "iterations", "weights"])
        for i, result in rows:
            writer.writerow(
                [i, result.iterations, ";".join(_FLOAT_FMT % v for v in result.w)]
            )
    config = {
        "distances": args.distances,
        "lambda": args.lam,
        "eta": args.eta,
        "beta": args.beta,
        "max_iters": args.max_iters,
        "tol": args.tol,
        "gradient_mode": args.gradient_mode,
        "threads": args.threads,
    }
    _write_manifest(
        f"{args.out}.manifest.json", "solve-weights", config, 0, [args.out], started
    )
    return 0


def _cmd_train(args) -> int:
    started = time.perf_counter()
    seed = args.seed if args.seed is not None else _default_seed()
    center_set = load_centers(args.centers)
    samples = _load_samples(args.data, args.data_format, center_set.m_labels)
    if len(samples[0].labels) != center_set.m_labels:
        raise ConfigError(
            f"dataset has M={len(samples[0].labels)} labels but the centers "
            f"file defines M={center_set.m_labels}"
        )
    hidden = tuple(int(h) for h in args.hidden.split(",") if h)
    loss_cfg = LossConfig(beta=args.beta, gamma=args.gamma, lam=args.lam)
    solver_cfg = WeightSolverConfig(
        lam=args.lam, eta=args.eta, beta=args.beta, gradient_mode=args.gradient_mode
    )
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        lr0=args.lr,
        hidden=hidden,
        loss=loss_cfg,
        solver=solver_cfg,
        weight_mode=args.weight_mode,
        seed=seed,
    )
    state = train(samples, center_set, cfg)

    ckpt_path = f"{args.out_prefix}.ckpt"
    weights_path = f"{args.out_prefix}.weights.csv"
    loss_path = f"{args.out_prefix}.loss.csv"
    save_checkpoint(
        ckpt_path, state.params, center_set.k_bits, center_set.m_labels, seed
    )
    with open(weights_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", "label", "weight"])
        for i, (assignment, w) in enumerate(
            zip(state.assignments, state.weight_table)
        ):
            for label, value in zip(assignment.center_indices, w):
                writer.writerow([i, int(label), _FLOAT_FMT % value])
    with open(loss_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "total", "central", "quantization", "entropy"])
        for epoch, entry in enumerate(state.loss_history):
            writer.writerow(
                [epoch]
                + [
                    _FLOAT_FMT % entry[key]
                    for key in ("total", "central", "quantization", "entropy")
                ]
            )
    config = {
        "data": args.data,
        "data_format": args.data_format,
        "centers": args.centers,
        "epochs": args.epochs,
        "batch": args.batch,
        "lr": args.lr,
        "hidden": list(hidden),
        "beta": args.beta,
        "lambda": args.lam,
        "gamma": args.gamma,
        "eta": args.eta,
        "weight_mode": args.weight_mode,
        "gradient_mode": args.gradient_mode,
        "threads": args.threads,
    }
    _write_manifest(
        f"{args.out_prefix}.manifest.json",
        "train",
        config,
        seed,
        [ckpt_path, weights_path, loss_path],
        started,
    )
    return 0


def _cmd_eval(args) -> int:
    started = time.perf_counter()
    params, meta = load_checkpoint(args.checkpoint)
    m_labels = meta["m_labels"]
    queries = _load_samples(args.queries, args.data_format, m_labels)
    database = _load_samples(args.database, args.data_format, m_labels)
    for name, samples in (("queries", queries), ("database", database)):
        if len(samples[0].features) != params.sizes[0]:
            raise ConfigError(
                f"{name} have D={len(samples[0].features)} features but the "
                f"checkpoint expects D={params.sizes[0]}"
            )
        if len(samples[0].labels) != m_labels:
            raise ConfigError(
                f"{name} have M={len(samples[0].labels)} labels but the "
                f"checkpoint expects M={m_labels}"
            )
    query_codes = pack_database(encode_binary(params, features_matrix(queries)))
    db_codes = pack_database(encode_binary(params, features_matrix(database)))
    query_labels = labels_matrix(queries)
    db_labels = labels_matrix(database)
    metrics = {
        "map_at_k": map_at_k(query_codes, query_labels, db_codes, db_labels, args.k),
        "precision_at_k": precision_at_k(
            query_codes, query_labels, db_codes, db_labels, args.k
        ),
        "k": args.k,
        "n_queries": len(queries),
        "n_database": len(database),
    }
    with open(args.out, "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = [args.out]
    if args.dump_codes:
        db_path = f"{args.dump_codes}.database.txt"
        q_path = f"{args.dump_codes}.queries.txt"
        save_codes(db_path, db_codes)
        save_codes(q_path, query_codes)
        outputs += [db_path, q_path]
    config = {
        "checkpoint": args.checkpoint,
        "queries": args.queries,
        "database": args.database,
        "data_format": args.data_format,
        "k": args.k,
        "dump_codes": args.dump_codes,
        "threads": args.threads,
    }
    _write_manifest(
        f"{args.out}.manifest.json", "eval", config, meta["seed"], outputs, started
    )
    return 0


def _read_weights_csv(path):
    per_sample: dict[int, list[tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["sample", "label", "weight"]:
            raise DataError(
                f"{path}: expected columns sample,label,weight, "
                f"found {reader.fieldnames}"
            )
        for row in reader:
            per_sample.setdefault(int(row["sample"]), []).append(
                (int(row["label"]), float(row["weight"]))
            )
    return {
        i: np.array([v for _, v in sorted(entries)])
        for i, entries in per_sample.items()
    }


def _cmd_weight_report(args) -> int:
    started = time.perf_counter()
    samples = load_dataset(args.data)
    if all(s.proportions is None for s in samples):
        raise DataError(f"{args.data} carries no ground-truth proportions")
    weight_rows = _read_weights_csv(args.weights)
    report_path = f"{args.out_prefix}.csv"
    summary_path = f"{args.out_prefix}.summary.json"
    scores = []
    n_excluded = 0
    n_single = 0
    all_weights = []
    with open(report_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["sample", "n_labels", "weights", "proportions", "spearman"]
        )
        for i, sample in enumerate(samples):
            if i not in weight_rows:
                raise DataError(f"weights file has no rows for sample {i}")
            w = weight_rows[i]
            c = sample.n_labels()
            if w.size != c:
                raise DataError(
                    f"sample {i}: {w.size} weights for {c} positive labels"
                )
            all_weights.extend(w.tolist())
            props = sample.proportions
            prop_text = (
                ";".join("%.9g" % v for v in props) if props is not None else "-"
            )
            rho_text = ""
            if props is not None and c >= 2:
                try:
                    rho = spearman_corr(w, props)
                except EvaluationError:
                    n_excluded += 1
                else:
                    scores.append(rho)
                    rho_text = "%.9g" % rho
            elif c < 2:
                n_single += 1
            writer.writerow(
                [i, c, ";".join("%.9g" % v for v in w), prop_text, rho_text]
            )
    summary = {
        "mean_spearman": float(np.mean(scores)) if scores else None,
        "weight_variance": float(np.var(all_weights)),
        "n_samples": len(samples),
        "n_scored": len(scores),
        "n_excluded": n_excluded,
        "n_single_label": n_single,
    }
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    config = {"weights": args.weights, "data": args.data, "threads": args.threads}
    _write_manifest(
        f"{args.out_prefix}.manifest.json",
        "weight-report",
        config,
        0,
        [report_path, summary_path],
        started,
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icshash",
        description="Instance-weighted central-similarity hashing toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument(
            "--threads",
            type=int,
            default=1,
            help="compute threads; all work is single-threaded, the flag is "
            "accepted for interface stability (1 guarantees bit-identical reruns)",
        )

    p = sub.add_parser("centers", help="generate a hash-center file")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--labels", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_centers)

    p = sub.add_parser(
        "solve-weights",
        help="solve center weights for a file of distance vectors "
        "(one sample per line, space-separated)",
    )
    p.add_argument("--distances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument(
        "--gradient-mode", choices=("paper", "exact"), default="paper"
    )
    add_common(p)
    p.set_defaults(func=_cmd_solve_weights)

    p = sub.add_parser("train", help="train the hash encoder")
    p.add_argument("--data", required=True)
    p.add_argument("--centers", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--data-format", choices=("text", "csv"), default="text")
    p.add_argument("--epochs", type=int, default=90)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--hidden", default="64", help="comma-separated hidden sizes")
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--weight-mode", choices=("learned", "equal"), default="learned")
    p.add_argument("--gradient-mode", choices=("paper", "exact"), default="paper")
    p.add_argument("--seed", type=int, default=None)
    add_common(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="retrieval metrics for a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--database", required=True)
    p.add_argument("--data-format", choices=("text", "csv"), default="text")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--dump-codes",
        default=None,
        help="also write <prefix>.database.txt and <prefix>.queries.txt code files",
    )
    add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser(
        "weight-report",
        help="per-sample rank correlation of learned weights vs proportions",
    )
    p.add_argument("--weights", required=True, help="weights CSV from train")
    p.add_argument("--data", required=True, help="dataset with proportions")
    p.add_argument("--out-prefix", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_weight_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
