"""Command-line entry point: ``argpair <subcommand> ...``.

Configuration is a flat JSON object. Precedence: command-line flags, then the
config file, then built-in defaults. Verbosity comes from ``ARGPAIR_LOG_LEVEL``.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .argrep import ArgRepConfig, load_embeddings
from .context import ContextConfig
from .corpus import (
    DataError, build_vocabulary, corpus_stats, encode_instance, extract_instances,
    generate_synthetic, instance_texts, read_dataset, read_threads, write_dataset,
)
from .corpus.instances import MAX_ARG_TOKENS, MAX_CONTEXT_ARGS, NEGATIVES
from .corpus.vocab import Vocabulary
from .evaluation import (
    POSTERIOR_HEADER, SIMILARITY_HEADER, SWEEP_VALUES, ABLATIONS, ablate, cluster_by_code,
    embedding_baseline, export_posteriors, instance_arguments, metrics, sweep, tfidf_baseline,
    write_csv, write_report,
)
from .match import MatchConfig
from .model import Model, ModelConfig
from .train import NumericalError, TrainConfig, fit, load_model, save_model

log = logging.getLogger("argpair")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4
_LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


class ConfigError(ValueError):
    """Unknown key, wrong type, out-of-range value or missing path."""


# flat config key -> section; field names are unique across sections
_SECTIONS = {"argrep": ArgRepConfig, "context": ContextConfig, "match": MatchConfig,
             "train": TrainConfig}
_FIELD_SECTION = {f.name: sec for sec, cls in _SECTIONS.items() for f in dataclasses.fields(cls)}
_INPUT_PATHS = ("train_data", "dev_data", "test_data", "embeddings")
_RUN_DEFAULTS: dict[str, Any] = {
    "ablation": "full", "kl_mode": "batch", "precision": 64,
    "train_data": None, "dev_data": None, "test_data": None, "embeddings": None,
    "checkpoint_dir": None, "output_dir": "runs/default",
    "vocab_threshold": 15, "max_context_args": MAX_CONTEXT_ARGS, "max_arg_tokens": MAX_ARG_TOKENS,
}
KNOWN_KEYS = frozenset(_FIELD_SECTION) | frozenset(_RUN_DEFAULTS)


@dataclasses.dataclass
class RunConfig:
    model: ModelConfig
    train: TrainConfig
    run: dict

    @property
    def dtype(self):
        return np.float64 if self.run["precision"] == 64 else np.float32

    @property
    def checkpoint_dir(self) -> Path:
        cd = self.run["checkpoint_dir"]
        return Path(cd) if cd else Path(self.run["output_dir"]) / "checkpoint"

    def to_dict(self) -> dict:
        flat = {}
        for sec in ("argrep", "context", "match"):
            flat.update(dataclasses.asdict(getattr(self.model, sec)))
        flat.update(dataclasses.asdict(self.train))
        flat.update(self.run)
        return dict(sorted(flat.items()))


def _coerce(key: str, value: Any, default: Any) -> Any:
    if value is None or default is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(default, (int, float)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        if isinstance(default, int) and not isinstance(default, bool) and float(value) != int(value):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return type(default)(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _parse_scalar(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config_file(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8") or "{}")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return raw


def parse_and_validate(config_path=None, overrides: Optional[dict] = None,
                       check_paths: bool = True) -> RunConfig:
    """Resolve defaults < file < overrides and validate every value."""
    values: dict[str, Any] = {}
    if config_path is not None:
        values.update(load_config_file(config_path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(values) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}" + (f" (and {len(unknown) - 1} more)"
                                                          if len(unknown) > 1 else ""))
    sections = {sec: cls() for sec, cls in _SECTIONS.items()}
    run = dict(_RUN_DEFAULTS)
    for key, value in values.items():
        if key in _FIELD_SECTION:
            obj = sections[_FIELD_SECTION[key]]
            setattr(obj, key, _coerce(key, value, getattr(obj, key)))
        else:
            run[key] = _coerce(key, value, _RUN_DEFAULTS[key])
    if run["ablation"] not in ABLATIONS:
        raise ConfigError(f"ablation must be one of {', '.join(ABLATIONS)}; got {run['ablation']!r}")
    if run["precision"] not in (32, 64):
        raise ConfigError(f"precision must be 32 or 64, got {run['precision']}")
    for key in ("vocab_threshold",):
        if run[key] < 0:
            raise ConfigError(f"{key} must be >= 0, got {run[key]}")
    for key in ("max_context_args", "max_arg_tokens"):
        if run[key] < 1:
            raise ConfigError(f"{key} must be >= 1, got {run[key]}")
    model = ModelConfig(sections["argrep"], sections["context"], sections["match"],
                        variant=run["ablation"], kl_mode=run["kl_mode"])
    try:
        model.validate()
        sections["train"].validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if check_paths:
        for key in _INPUT_PATHS:
            if run[key] is not None and not Path(run[key]).exists():
                raise ConfigError(f"{key}: path {run[key]} does not exist")
    return RunConfig(model, sections["train"], run)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, cfg: RunConfig, command: str) -> Path:
    rec = {
        "command": command,
        "version": __version__,
        "seed": cfg.train.seed,
        "config": cfg.to_dict(),
        "datasets": {k: sha256(cfg.run[k]) for k in _INPUT_PATHS if cfg.run[k]},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(rec, indent=1, sort_keys=True))
    return path


def _encode(instances, vocab: Vocabulary, cfg: RunConfig):
    return [encode_instance(i, vocab, cfg.run["max_context_args"], cfg.run["max_arg_tokens"])
            for i in instances]


def _read(path, negatives: int = NEGATIVES):
    if path is None:
        raise ConfigError("a dataset path is required")
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset {path} does not exist")
    return read_dataset(path, negatives=negatives)


def _config_from_args(args, extra: Optional[dict] = None) -> RunConfig:
    overrides = dict(extra or {})
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = _parse_scalar(v)
    for flag, key in (("margin", "margin"), ("seed", "seed"), ("ablation", "ablation"),
                      ("precision", "precision"), ("epochs", "epochs"), ("lr", "lr"),
                      ("lam", "lam"), ("output_dir", "output_dir")):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = v
    path = getattr(args, "config", None)
    manifest = getattr(args, "manifest", None)
    if manifest is not None:
        if path is not None:
            raise ConfigError("use either --config or --manifest, not both")
        try:
            rec = json.loads(Path(manifest).read_text())
            base, digests = rec["config"], rec.get("datasets", {})
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read manifest {manifest}: {exc}") from exc
        overrides = {**base, **overrides}
    cfg = parse_and_validate(path, overrides)
    if manifest is not None:
        for key, digest in digests.items():
            if cfg.run.get(key) and sha256(cfg.run[key]) != digest:
                raise DataError(f"{key} {cfg.run[key]} does not match the manifest checksum")
    log.info("resolved config: %s", json.dumps(cfg.to_dict(), sort_keys=True))
    return cfg


def _train_model(cfg: RunConfig, train_insts, dev_insts):
    vocab = build_vocabulary(instance_texts(train_insts), cfg.run["vocab_threshold"])
    pretrained = None
    if cfg.run["embeddings"]:
        pretrained = load_embeddings(cfg.run["embeddings"], dim=cfg.model.argrep.word_dim)
    model = Model(cfg.model, len(vocab), seed=cfg.train.seed, dtype=cfg.dtype,
                  pretrained=pretrained, vocab=vocab)
    result = fit(model, _encode(train_insts, vocab, cfg), _encode(dev_insts, vocab, cfg), cfg.train)
    return model, vocab, result


# --------------------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    insts, _ = generate_synthetic(args.templates, args.train + args.dev + args.test, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cuts = {"train": insts[:args.train], "dev": insts[args.train:args.train + args.dev],
            "test": insts[args.train + args.dev:]}
    for name, part in cuts.items():
        if part:
            write_dataset(out / f"{name}.jsonl", part)
            print(f"{name}: {len(part)} instances -> {out / f'{name}.jsonl'}")
    return 0


def cmd_build_data(args) -> int:
    threads = read_threads(args.threads)
    insts = extract_instances(threads, negatives=args.negatives, seed=args.seed)
    n = write_dataset(args.out, insts)
    print(f"{n} instances from {len(threads)} threads -> {args.out}")
    return 0


def cmd_stats(args) -> int:
    insts = _read(args.data)
    posts = []
    if args.threads:
        for _, op, replies in read_threads(args.threads):
            posts.append(op)
            posts.extend(replies)
    st = corpus_stats(insts, posts)
    rows = st.as_rows() if posts else st.as_rows()[2:]
    for name, value in rows:
        print(f"{name}\t{value}")
    return 0


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    out = Path(cfg.run["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    # the run log always records INFO; console verbosity is set on its own handler
    handler = logging.FileHandler(out / "run.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter(_LOG_FORMAT))
    handler.setLevel(logging.INFO)
    old_level = log.level
    log.setLevel(logging.INFO)
    log.addHandler(handler)
    try:
        log.info("resolved config: %s", json.dumps(cfg.to_dict(), sort_keys=True))
        train_insts = _read(cfg.run["train_data"], cfg.train.negatives)
        dev_insts = _read(cfg.run["dev_data"], cfg.train.negatives)
        write_manifest(out / "manifest.json", cfg, "train")
        model, vocab, result = _train_model(cfg, train_insts, dev_insts)
        header = list(result.history[0]) if result.history else ["epoch"]
        write_csv(out / "train_log.csv", header, ([row[k] for k in header] for row in result.history))
        save_model(model, cfg.checkpoint_dir, vocab, {
            "epoch": result.best_epoch, "seed": cfg.train.seed, "config": cfg.to_dict(),
            "dev": result.best_dev.as_row(), "version": __version__,
        })
        write_report(out / "dev_report.csv", result.best_dev, cfg.run["ablation"])
        if cfg.run["test_data"]:
            test = _encode(_read(cfg.run["test_data"], cfg.train.negatives), vocab, cfg)
            write_report(out / "test_report.csv", metrics(model.rank(test)), cfg.run["ablation"])
        print(f"best epoch {result.best_epoch}: dev P@1 {result.best_dev.p_at_1:.4f} "
              f"MRR {result.best_dev.mrr:.4f} -> {cfg.checkpoint_dir}")
    finally:
        log.removeHandler(handler)
        log.setLevel(old_level)
        handler.close()
    return 0


def _load(checkpoint):
    if not Path(checkpoint).exists():
        raise ConfigError(f"checkpoint {checkpoint} does not exist")
    model, vocab, meta = load_model(checkpoint)
    if vocab is None:
        raise DataError(f"checkpoint {checkpoint} has no vocabulary")
    return model, vocab, meta


def _encode_with_meta(insts, vocab, meta):
    conf = meta.get("config", {})
    return [encode_instance(i, vocab, conf.get("max_context_args", MAX_CONTEXT_ARGS),
                            conf.get("max_arg_tokens", MAX_ARG_TOKENS)) for i in insts]


def cmd_eval(args) -> int:
    model, vocab, meta = _load(args.checkpoint)
    data = _encode_with_meta(_read(args.data), vocab, meta)
    report = metrics(model.rank(data))
    if args.out:
        write_report(args.out, report, model.config.variant)
    print(f"P@1 {report.p_at_1:.4f} MRR {report.mrr:.4f} ties {report.ties} n {report.n}")
    return 0


def cmd_baseline(args) -> int:
    insts = _read(args.data)
    if args.kind == "tfidf":
        report = tfidf_baseline(insts)
    else:
        if not args.embeddings:
            raise ConfigError("--kind embedding needs --embeddings FILE")
        report = embedding_baseline(insts, load_embeddings(args.embeddings, dim=args.dim))
    if args.out:
        write_report(args.out, report, args.kind)
    print(f"{args.kind}: P@1 {report.p_at_1:.4f} MRR {report.mrr:.4f} ties {report.ties}")
    return 0


def cmd_ablate(args) -> int:
    base = parse_and_validate(args.config, check_paths=False).model if args.config else None
    try:
        cfg = ablate(args.name, base)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    model = Model(cfg, args.vocab_size, seed=0)
    print(json.dumps({"config": cfg.to_dict(), "score_input_dim": cfg.score_input_dim,
                      "parameters": model.store.num_values()}, indent=1))
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values must be comma-separated integers: {args.values!r}") from exc
    train_insts = _read(cfg.run["train_data"], cfg.train.negatives)
    dev_insts = _read(cfg.run["dev_data"], cfg.train.negatives)
    vocab = build_vocabulary(instance_texts(train_insts), cfg.run["vocab_threshold"])
    test = _encode(_read(cfg.run["test_data"]), vocab, cfg) if cfg.run["test_data"] else None
    rows = sweep(args.axis, values, cfg.model, cfg.train, _encode(train_insts, vocab, cfg),
                 _encode(dev_insts, vocab, cfg), len(vocab), test, cfg.dtype)
    out = Path(args.out or Path(cfg.run["output_dir"]) / f"sweep_{args.axis}.csv")
    write_csv(out, ["axis", "value", "p_at_1", "mrr", "best_epoch"],
              ([r.axis, r.value, f"{r.p_at_1:.6f}", f"{r.mrr:.6f}", r.best_epoch] for r in rows))
    for r in rows:
        print(f"{r.axis}={r.value}\tP@1 {r.p_at_1:.4f}\tMRR {r.mrr:.4f}")
    return 0


def _require_latents(model) -> None:
    if model.config.representation != "dvae":
        raise ConfigError(f"variant {model.config.variant!r} has no discrete codes")


def cmd_analyze_codes(args) -> int:
    model, vocab, meta = _load(args.checkpoint)
    _require_latents(model)
    data = _encode_with_meta(_read(args.data), vocab, meta)
    clusters = cluster_by_code(model, instance_arguments(data))
    write_csv(args.out, ["codes", "size", "members"],
              ([" ".join(map(str, c.codes)), c.size, " ".join(c.members)] for c in clusters))
    big = sum(1 for c in clusters if c.size > args.large)
    print(f"{len(clusters)} clusters, {big} with more than {args.large} arguments -> {args.out}")
    return 0


def cmd_export_posteriors(args) -> int:
    model, vocab, meta = _load(args.checkpoint)
    _require_latents(model)
    data = _encode_with_meta(_read(args.data), vocab, meta)
    if args.instance:
        data = [d for d in data if d.id in set(args.instance)]
        if not data:
            raise DataError(f"no instance with id in {args.instance}")
    post_rows, sim_rows = [], []
    for inst in data:
        p, s = export_posteriors(model, inst)
        post_rows.extend(p)
        sim_rows.extend(s)
    out = Path(args.out_dir)
    write_csv(out / "posteriors.csv", POSTERIOR_HEADER, post_rows)
    write_csv(out / "similarity.csv", SIMILARITY_HEADER, sim_rows)
    print(f"{len(data)} instances -> {out}")
    return 0


def cmd_gradcheck(args) -> int:
    from .selfcheck import check_all

    worst = 0.0
    for variant, reports in check_all(args.eps, args.samples).items():
        err = max(r.max_relative_error for r in reports)
        worst = max(worst, err)
        print(f"{variant}\tmax relative error {err:.3e}\t{'PASS' if err < args.tol else 'FAIL'}")
    if worst >= args.tol:
        raise NumericalError(f"gradient check failed: {worst:.3e} >= {args.tol:g}")
    return 0


# --------------------------------------------------------------------------- parser

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--manifest", help="re-run from a manifest written by an earlier run")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    p.add_argument("--ablation", choices=ABLATIONS)
    p.add_argument("--seed", type=int)
    p.add_argument("--margin", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--precision", type=int, choices=(32, 64))
    p.add_argument("--output-dir", dest="output_dir")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="argpair", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a seeded synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--templates", type=int, default=5)
    p.add_argument("--train", type=int, default=50)
    p.add_argument("--dev", type=int, default=20)
    p.add_argument("--test", type=int, default=0)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build-data", help="extract instances from discussion threads")
    p.add_argument("--threads", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negatives", type=int, default=4)
    p.set_defaults(func=cmd_build_data)

    p = sub.add_parser("stats", help="dataset overview statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--threads", help="thread file, for the per-post rows")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a model and write checkpoint, log and manifest")
    _add_run_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="rank a dataset with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="cosine-similarity baselines")
    p.add_argument("--kind", choices=("tfidf", "embedding"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--out")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("ablate", help="show the wiring of an ablation variant")
    p.add_argument("--name", required=True)
    p.add_argument("--config")
    p.add_argument("--vocab-size", type=int, default=1000)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="train one model per value of M or K")
    _add_run_flags(p)
    p.add_argument("--axis", choices=("M", "K"), required=True)
    p.add_argument("--values", default=",".join(map(str, SWEEP_VALUES)))
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze-codes", help="cluster arguments by discrete code set")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--large", type=int, default=100, help="size threshold for the summary line")
    p.set_defaults(func=cmd_analyze_codes)

    p = sub.add_parser("export-posteriors", help="per-latent posteriors and q-reply distances")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--instance", action="append", help="restrict to these instance ids")
    p.set_defaults(func=cmd_export_posteriors)

    p = sub.add_parser("gradcheck", help="finite-difference check of every model variant")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("ARGPAIR_LOG_LEVEL", "WARNING").upper()
    console = logging.StreamHandler()
    console.setFormatter(logging.Formatter(_LOG_FORMAT))
    console.setLevel(getattr(logging, level, logging.WARNING))
    log.addHandler(console)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        log.removeHandler(console)


if __name__ == "__main__":
    raise SystemExit(main())
