"""Command-line entry point: code generation, synthetic data, training, analysis.

Experiments are driven by a flat ``key = value`` config file (``#`` starts a
comment).  Every run writes a ``config.echo`` with all resolved settings,
itself a valid config file, so any run can be reproduced from its output
directory alone.  All outputs are written atomically and all randomness is
seeded, so identical invocations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from ._util import atomic_write, fmt_float
from . import analysis, codes, datasets, decoder, net, spectral
from .codes import Binarization, CodeKind, CodeMatrix
from .datasets import Dataset
from .net import TrainConfig, TrainingDivergedError

_STRATEGIES = ("onehot", "gaussian", "dense", "spectral")


# ---------------------------------------------------------------- config ----


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved settings for one training run."""

    # dataset: either a CSV path or synthetic generation parameters
    data_csv: str | None
    attributes_csv: str | None
    synth_depth: int
    synth_branching: int
    synth_samples_per_class: int
    synth_class_sep: float
    synth_noise_sigma: float
    synth_dim: int
    train_fraction: float
    # code: either a CSV path or a generation strategy
    code_csv: str | None
    code_strategy: str
    code_bits: int | None
    code_binarize: str
    code_normalize_rows: str
    code_candidates: int
    # net + training
    hidden_sizes: tuple[int, ...]
    epochs: int
    batch_size: int
    learning_rate: float
    lr_decay_epoch: int | None
    lr_decay_factor: float
    momentum: float
    shuffle: bool
    head: str
    seed: int
    out_dir: str

    def echo_lines(self) -> list[str]:
        pairs: list[tuple[str, str]] = []

        def put(key: str, value) -> None:
            if value is None:
                return
            if isinstance(value, bool):
                pairs.append((key, "true" if value else "false"))
            elif isinstance(value, float):
                pairs.append((key, fmt_float(value)))
            elif isinstance(value, tuple):
                pairs.append((key, ",".join(str(v) for v in value)))
            else:
                pairs.append((key, str(value)))

        put("data_csv", self.data_csv)
        put("attributes_csv", self.attributes_csv)
        if self.data_csv is None:
            put("synth_depth", self.synth_depth)
            put("synth_branching", self.synth_branching)
            put("synth_samples_per_class", self.synth_samples_per_class)
            put("synth_class_sep", self.synth_class_sep)
            put("synth_noise_sigma", self.synth_noise_sigma)
            put("synth_dim", self.synth_dim)
        put("train_fraction", self.train_fraction)
        put("code_csv", self.code_csv)
        if self.code_csv is None:
            put("code_strategy", self.code_strategy)
            put("code_bits", self.code_bits)
            put("code_binarize", self.code_binarize)
            put("code_candidates", self.code_candidates)
        put("code_normalize_rows", self.code_normalize_rows)
        put("hidden_sizes", self.hidden_sizes)
        put("epochs", self.epochs)
        put("batch_size", self.batch_size)
        put("learning_rate", self.learning_rate)
        put("lr_decay_epoch", self.lr_decay_epoch)
        put("lr_decay_factor", self.lr_decay_factor)
        put("momentum", self.momentum)
        put("shuffle", self.shuffle)
        put("head", self.head)
        put("seed", self.seed)
        put("out_dir", self.out_dir)
        return [f"{k} = {v}" for k, v in sorted(pairs)]


def parse_config_text(text: str, source: str = "config") -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` comments; duplicate keys rejected."""
    entries: dict[str, str] = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ValueError(f"{source}:{i}: expected 'key = value', got {raw!r}")
        if key in entries:
            raise ValueError(f"{source}:{i}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _typed(entries: dict[str, str], source: str):
    taken: set[str] = set()

    def get(key: str, default=None):
        taken.add(key)
        return entries.get(key, default)

    def get_int(key: str, default: int | None = None) -> int | None:
        raw = get(key)
        if raw is None or raw == "":
            return default
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{source}: key {key!r} must be an integer, got {raw!r}") from None

    def get_float(key: str, default: float | None = None) -> float | None:
        raw = get(key)
        if raw is None or raw == "":
            return default
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"{source}: key {key!r} must be a number, got {raw!r}") from None

    def get_bool(key: str, default: bool) -> bool:
        raw = get(key)
        if raw is None or raw == "":
            return default
        if raw not in ("true", "false"):
            raise ValueError(f"{source}: key {key!r} must be true or false, got {raw!r}")
        return raw == "true"

    def get_choice(key: str, choices: tuple[str, ...], default: str) -> str:
        raw = get(key, default)
        if raw not in choices:
            raise ValueError(
                f"{source}: key {key!r} must be one of {', '.join(choices)}, got {raw!r}"
            )
        return raw

    return get, get_int, get_float, get_bool, get_choice, taken


def resolve_config(entries: dict[str, str], source: str = "config") -> ExperimentConfig:
    get, get_int, get_float, get_bool, get_choice, taken = _typed(entries, source)

    hidden_raw = get("hidden_sizes", "32")
    if hidden_raw == "":
        hidden: tuple[int, ...] = ()
    else:
        try:
            hidden = tuple(int(v.strip()) for v in hidden_raw.split(","))
        except ValueError:
            raise ValueError(
                f"{source}: key 'hidden_sizes' must be comma-separated integers"
            ) from None

    cfg = ExperimentConfig(
        data_csv=get("data_csv"),
        attributes_csv=get("attributes_csv"),
        synth_depth=get_int("synth_depth", 2),
        synth_branching=get_int("synth_branching", 4),
        synth_samples_per_class=get_int("synth_samples_per_class", 50),
        synth_class_sep=get_float("synth_class_sep", 4.0),
        synth_noise_sigma=get_float("synth_noise_sigma", 1.0),
        synth_dim=get_int("synth_dim", 8),
        train_fraction=get_float("train_fraction", 0.8),
        code_csv=get("code_csv"),
        code_strategy=get_choice("code_strategy", _STRATEGIES, "gaussian"),
        code_bits=get_int("code_bits"),
        code_binarize=get_choice("code_binarize", ("raw", "zero", "median"), "raw"),
        code_normalize_rows=get_choice(
            "code_normalize_rows", ("auto", "true", "false"), "auto"
        ),
        code_candidates=get_int("code_candidates", 10000),
        hidden_sizes=hidden,
        epochs=get_int("epochs", 30),
        batch_size=get_int("batch_size", 16),
        learning_rate=get_float("learning_rate", 0.1),
        lr_decay_epoch=get_int("lr_decay_epoch"),
        lr_decay_factor=get_float("lr_decay_factor", 0.1),
        momentum=get_float("momentum", 0.0),
        shuffle=get_bool("shuffle", True),
        head=get_choice("head", ("auto", "decoder", "softmax"), "auto"),
        seed=get_int("seed", 0),
        out_dir=get("out_dir", ""),
    )
    unknown = sorted(set(entries) - taken)
    if unknown:
        raise ValueError(f"{source}: unknown config keys: {', '.join(unknown)}")
    if not cfg.out_dir:
        raise ValueError(f"{source}: key 'out_dir' is required")
    for key, path in (
        ("data_csv", cfg.data_csv),
        ("attributes_csv", cfg.attributes_csv),
        ("code_csv", cfg.code_csv),
    ):
        if path is not None and not os.path.exists(path):
            raise ValueError(f"{source}: {key} path does not exist: {path}")
    return cfg


# ------------------------------------------------------------- experiment ---


def _resolve_normalize_rows(mode: str) -> bool | None:
    return None if mode == "auto" else mode == "true"


def _build_code(
    strategy: str,
    n: int,
    bits: int | None,
    seed: int,
    candidates: int,
    binarize_mode: str,
    normalize_mode: str,
    train_set: Dataset | None,
    flag: str = "--strategy",
) -> CodeMatrix:
    """Shared by gen-code and train; `flag` names the offending option in errors."""
    if strategy == "onehot":
        if bits is not None and bits != n:
            raise ValueError(f"{flag}=onehot fixes the bit count at n={n}, got {bits}")
        code = codes.one_hot(n)
    elif strategy == "gaussian":
        k = bits if bits is not None else codes.default_code_length(n)
        code = codes.gaussian_code(n, k, seed=seed)
    elif strategy == "dense":
        k = bits if bits is not None else codes.default_code_length(n)
        code = codes.dense_random_code(n, k, candidates=candidates, seed=seed)
    elif strategy == "spectral":
        if train_set is None:
            raise ValueError(f"{flag}=spectral needs data to derive a similarity graph")
        g = spectral.similarity_from_class_means(
            train_set.features, train_set.labels, n
        )
        k = bits if bits is not None else min(codes.default_code_length(n), n - 1)
        if k > n - 1:
            raise ValueError(
                f"--bits: spectral codes support at most n-1={n - 1} bits, got {k}"
            )
        code = spectral.spectral_code(g, k)
    else:
        raise ValueError(f"{flag}: unknown strategy {strategy!r}")

    if binarize_mode != "raw":
        code = codes.binarize(code, Binarization(binarize_mode))
    normalize = _resolve_normalize_rows(normalize_mode)
    if normalize is not None and normalize != code.normalize_rows:
        code = CodeMatrix(
            code.values, code.kind, code.binarization, normalize_rows=normalize
        )
    return code


def _load_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.data_csv is not None:
        ds = datasets.load_csv(cfg.data_csv)
        if cfg.attributes_csv is not None:
            names, attrs = datasets.load_attributes_csv(cfg.attributes_csv)
            if attrs.shape[0] != ds.n:
                raise ValueError(
                    f"attributes_csv has {attrs.shape[0]} rows for {ds.n} classes"
                )
            ds = datasets.with_attributes(ds, attrs, names)
        return ds
    return datasets.synth_hierarchical(
        depth=cfg.synth_depth,
        branching=cfg.synth_branching,
        samples_per_class=cfg.synth_samples_per_class,
        class_sep=cfg.synth_class_sep,
        noise_sigma=cfg.synth_noise_sigma,
        p=cfg.synth_dim,
        seed=cfg.seed,
    )


def run_experiment(cfg: ExperimentConfig) -> list[net.MetricsRow]:
    """Data -> code -> train -> artifacts in cfg.out_dir; returns metric rows."""
    full = _load_dataset(cfg)
    train_set, eval_set = datasets.split(full, cfg.train_fraction, seed=cfg.seed)

    if cfg.code_csv is not None:
        code = codes.load_code_csv(cfg.code_csv)
        if code.n != full.n:
            raise ValueError(f"code has {code.n} codewords for {full.n} classes")
        normalize = _resolve_normalize_rows(cfg.code_normalize_rows)
        if normalize is not None and normalize != code.normalize_rows:
            code = CodeMatrix(
                code.values, code.kind, code.binarization, normalize_rows=normalize
            )
    else:
        code = _build_code(
            cfg.code_strategy,
            full.n,
            cfg.code_bits,
            cfg.seed,
            cfg.code_candidates,
            cfg.code_binarize,
            cfg.code_normalize_rows,
            train_set,
            flag="code_strategy",
        )

    head = cfg.head
    if head == "auto":
        head = "softmax" if code.kind is CodeKind.ONE_HOT else "decoder"
    out_size = code.n if head == "softmax" else code.k
    layer_sizes = [full.features.shape[1], *cfg.hidden_sizes, out_size]

    params = net.init(layer_sizes, seed=cfg.seed + 1)
    tc = TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        lr_decay_epoch=cfg.lr_decay_epoch,
        lr_decay_factor=cfg.lr_decay_factor,
        seed=cfg.seed,
        shuffle=cfg.shuffle,
        head=head,
        momentum=cfg.momentum,
    )
    trained, rows = net.train(params, train_set, code, tc, eval_set=eval_set)

    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    net.save_metrics(rows, os.path.join(out, "metrics.csv"))
    net.save_model(trained, os.path.join(out, "model.bin"))
    codes.save_code_csv(code, os.path.join(out, "code.csv"))
    datasets.save_csv(train_set, os.path.join(out, "train.csv"))
    datasets.save_csv(eval_set, os.path.join(out, "eval.csv"))
    if full.attributes is not None:
        datasets.save_attributes_csv(full, os.path.join(out, "attributes.csv"))
    with atomic_write(os.path.join(out, "config.echo")) as fh:
        for line in cfg.echo_lines():
            fh.write(line + "\n")
    return rows


# ------------------------------------------------------------ subcommands ---


def cmd_gen_code(args: argparse.Namespace) -> int:
    train_set = None
    n = args.classes
    if args.strategy == "spectral":
        if args.similarity is not None:
            g = spectral.load_similarity_csv(args.similarity)
            if n is not None and n != g.n:
                raise ValueError(
                    f"--classes={n} does not match similarity size {g.n}"
                )
            n = g.n
            bits = args.bits if args.bits is not None else min(
                codes.default_code_length(n), n - 1
            )
            if bits > n - 1:
                raise ValueError(
                    f"--bits: spectral codes support at most n-1={n - 1} bits, got {bits}"
                )
            code = spectral.spectral_code(g, bits)
            if args.binarize is not None:
                code = codes.binarize(code, Binarization(args.binarize))
            normalize = _resolve_normalize_rows(args.normalize_rows)
            if normalize is not None and normalize != code.normalize_rows:
                code = CodeMatrix(
                    code.values, code.kind, code.binarization, normalize_rows=normalize
                )
        elif args.data is not None:
            ds = datasets.load_csv(args.data)
            if n is not None and n != ds.n:
                raise ValueError(f"--classes={n} does not match dataset classes {ds.n}")
            n = ds.n
            code = _build_code(
                "spectral",
                n,
                args.bits,
                args.seed,
                args.candidates,
                args.binarize or "raw",
                args.normalize_rows,
                ds,
            )
        else:
            raise ValueError("--strategy=spectral needs --similarity or --data")
    else:
        if n is None:
            raise ValueError("--classes is required for data-independent strategies")
        code = _build_code(
            args.strategy,
            n,
            args.bits,
            args.seed,
            args.candidates,
            args.binarize or "raw",
            args.normalize_rows,
            None,
        )

    codes.save_code_csv(code, args.out)
    m = codes.code_metrics(code)
    print(
        f"wrote {args.out}: n={code.n} k={code.k} kind={code.kind.value} "
        f"binarization={code.binarization.value}"
    )
    print(
        f"min_row_hamming={m.min_row_hamming} "
        f"max_abs_row_corr={m.max_abs_row_corr:.6f} "
        f"max_abs_col_corr={m.max_abs_col_corr:.6f} "
        f"max_abs_column_balance={np.abs(m.column_balance).max():.6f}"
    )
    return 0


def cmd_synth_data(args: argparse.Namespace) -> int:
    ds = datasets.synth_hierarchical(
        depth=args.depth,
        branching=args.branching,
        samples_per_class=args.samples_per_class,
        class_sep=args.class_sep,
        noise_sigma=args.noise_sigma,
        p=args.dim,
        seed=args.seed,
    )
    datasets.save_csv(ds, args.out)
    print(f"wrote {args.out}: {ds.samples} samples, {ds.n} classes, dim {args.dim}")
    if args.attributes_out is not None:
        datasets.save_attributes_csv(ds, args.attributes_out)
        print(f"wrote {args.attributes_out}: {ds.attributes.shape[1]} attributes")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    with open(args.config, "r") as fh:
        entries = parse_config_text(fh.read(), source=args.config)
    cfg = resolve_config(entries, source=args.config)
    rows = run_experiment(cfg)
    final = [r for r in rows if r.split == "eval"] or rows
    print(
        f"wrote {cfg.out_dir}: {len(rows)} metric rows; "
        f"final {final[-1].split} accuracy {final[-1].accuracy:.4f}"
    )
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    code = codes.load_code_csv(args.code)
    params = net.load_model(args.model)
    ds = datasets.load_csv(args.data, n=args.classes if args.classes else code.n)

    if args.mode == "confusion":
        z = net.net_outputs(params, ds.features)
        if z.shape[1] != decoder.decoding_matrix(code).shape[1]:
            raise ValueError(
                f"net output size {z.shape[1]} does not match code bits {code.k}"
            )
        preds = decoder.predict_batch(z, decoder.decoding_matrix(code))
        cm = analysis.confusion(preds, ds.labels, ds.n)
        analysis.save_confusion_csv(cm, args.out)
        print(f"wrote {args.out}: accuracy {cm.accuracy:.4f}")
    elif args.mode == "ablate":
        if args.js:
            js = [int(v) for v in args.js.split(",")]
        else:
            js = list(range(1, code.k + 1))
        pairs = analysis.bit_ablation(params, ds, code, js)
        analysis.save_ablation_csv(pairs, args.out)
        print(f"wrote {args.out}: {len(pairs)} ablation points")
    else:  # correlate
        if args.attributes is None:
            raise ValueError("--attributes is required for mode=correlate")
        names, attrs = datasets.load_attributes_csv(args.attributes)
        table = analysis.attribute_correlation(code, attrs, names)
        analysis.save_correlation_csv(table, args.out)
        print(f"wrote {args.out}: {len(table)} correlations")
    return 0


# ------------------------------------------------------------------ parser --


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecoc",
        description="Code-matrix generation, training, and analysis for "
        "low-dimensional class embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-code", help="generate a code matrix CSV")
    g.add_argument("--strategy", required=True, choices=_STRATEGIES)
    g.add_argument("--classes", type=int, default=None, help="number of classes n")
    g.add_argument("--bits", type=int, default=None, help="code length k")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--candidates", type=int, default=10000, help="dense strategy pool size")
    g.add_argument("--binarize", choices=("zero", "median"), default=None)
    g.add_argument("--normalize-rows", choices=("auto", "true", "false"), default="auto")
    g.add_argument("--similarity", default=None, help="similarity CSV (spectral)")
    g.add_argument("--data", default=None, help="dataset CSV to derive similarity (spectral)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_code)

    s = sub.add_parser("synth-data", help="generate a synthetic hierarchical dataset")
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--branching", type=int, default=4)
    s.add_argument("--samples-per-class", type=int, default=50)
    s.add_argument("--class-sep", type=float, default=4.0)
    s.add_argument("--noise-sigma", type=float, default=1.0)
    s.add_argument("--dim", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--attributes-out", default=None)
    s.set_defaults(func=cmd_synth_data)

    t = sub.add_parser("train", help="run a training experiment from a config file")
    t.add_argument("--config", required=True)
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("analyze", help="produce a report CSV from training artifacts")
    a.add_argument("--model", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--code", required=True)
    a.add_argument("--mode", required=True, choices=("confusion", "ablate", "correlate"))
    a.add_argument("--attributes", default=None)
    a.add_argument("--js", default=None, help="comma-separated prefix lengths (ablate)")
    a.add_argument("--classes", type=int, default=None)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
