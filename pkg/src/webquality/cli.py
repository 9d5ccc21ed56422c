"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error (bad or missing input),
3 internal error.

Run configuration (JSON). Every key is optional; relative paths are resolved
against the directory holding the config file::

    {
      "train_dir": "data/train",
      "test_dir": "data/test",
      "model_dir": "model",
      "out_dir": "out",
      "task": 2,
      "mode": "standard",            # or "multilingual"
      "news_postprocess": false,
      "seed": 1,
      "jobs": 1,
      "tree": {"confidence_factor": 0.25, "min_instances": 2},
      "smote": {"k_neighbors": 5, "percentage": 100},
      "svm": {"cost": 0.04, "tolerance": 0.0001, "max_epochs": 1000},
      "cfc": {"b": 2.718281828459045}
    }

Command-line flags override values from the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

from .core import DataError
from .dtree import TreeConfig
from .ensemble import EnsembleConfig, load_ensemble, predict_all, save_ensemble, train_ensemble
from .evaluation import Task, report
from .harness import SynthSpec, generate, run_task
from .ingest import LABELS_FILE, load_dataset
from .linsvm import SvmConfig
from .outputs import (
    genre_confidences,
    rankings_from_predictions,
    read_assignments,
    read_predictions,
    read_quality_ranking,
    write_assignments,
    write_category_rankings,
    write_predictions,
    write_quality_ranking,
    write_report,
)
from .preprocess import SmoteConfig
from .quality import rank_by_quality

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    train_dir: Optional[Path] = None
    test_dir: Optional[Path] = None
    model_dir: Optional[Path] = None
    out_dir: Optional[Path] = None
    task: int = 2
    mode: str = "standard"
    news_postprocess: bool = False
    seed: int = 1
    jobs: int = 1
    tree: dict = field(default_factory=lambda: {"confidence_factor": 0.25, "min_instances": 2})
    smote: dict = field(default_factory=lambda: {"k_neighbors": 5, "percentage": 100})
    svm: dict = field(default_factory=lambda: {"cost": 0.04, "tolerance": 1e-4, "max_epochs": 1000})
    cfc: dict = field(default_factory=lambda: {"b": math.e})

    _PATHS = ("train_dir", "test_dir", "model_dir", "out_dir")
    _SECTIONS = {"tree": TreeConfig, "smote": SmoteConfig, "svm": SvmConfig}

    @classmethod
    def from_json(cls, path: Path) -> "RunConfig":
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise UsageError(f"{path}: invalid JSON ({e})") from None
        if not isinstance(raw, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        cfg = cls()
        known = {f.name for f in fields(cls)}
        for key, value in raw.items():
            if key not in known:
                raise UsageError(f"{path}: unknown config key {key!r}")
            if key in cls._PATHS:
                value = None if value is None else (path.parent / value)
            elif isinstance(getattr(cfg, key), dict):
                if not isinstance(value, dict):
                    raise UsageError(f"{path}: {key!r} must be an object")
                value = {**getattr(cfg, key), **value}
            setattr(cfg, key, value)
        return cfg

    def validate(self) -> None:
        if self.task not in (1, 2, 3):
            raise UsageError(f"task must be 1, 2 or 3, got {self.task!r}")
        if self.mode not in ("standard", "multilingual"):
            raise UsageError(f"mode must be 'standard' or 'multilingual', got {self.mode!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise UsageError("seed must be an integer")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise UsageError("jobs must be a positive integer")
        self.ensemble()
        cfc_keys = set(self.cfc) - {"b"}
        if cfc_keys:
            raise UsageError(f"unknown cfc setting(s): {sorted(cfc_keys)}")

    def ensemble(self) -> EnsembleConfig:
        """Classifier settings; the single seed feeds every randomized component."""
        built = {}
        for name, kind in self._SECTIONS.items():
            try:
                built[name] = kind(**{**getattr(self, name), "seed": self.seed})
            except TypeError as e:
                raise UsageError(f"bad {name} settings: {e}") from None
            except ValueError as e:
                raise UsageError(f"bad {name} settings: {e}") from None
        b = float(self.cfc["b"])
        if not b > 1.0:
            raise UsageError("cfc b must be greater than 1")
        multilingual = self.mode == "multilingual" or self.task == 3
        return EnsembleConfig(
            built["tree"], built["smote"], built["svm"], b, multilingual, self.news_postprocess, self.jobs
        )

    def need(self, name: str) -> Path:
        value = getattr(self, name)
        if value is None:
            flag = "--" + name.replace("_", "-")
            raise UsageError(f"{flag} is required (on the command line or in the config file)")
        return Path(value)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _common(p: argparse.ArgumentParser, dirs: Sequence[str]) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration (see module docs for the schema)")
    for d in dirs:
        p.add_argument(f"--{d}", type=Path, default=None, help=f"{d.replace('-', ' ')} (overrides the config)")
    p.add_argument("--seed", type=int, default=None, help="single seed for SMOTE, tree and SVM (default 1)")
    p.add_argument("--jobs", type=int, default=None, help="parallel category workers (default 1)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _classifier_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("classifier settings (defaults are the reference settings)")
    g.add_argument("--confidence-factor", type=float, default=None, help="tree pruning confidence C (default 0.25)")
    g.add_argument("--min-instances", type=int, default=None, help="tree minimum instances per leaf M (default 2)")
    g.add_argument("--smote-k", type=int, default=None, help="SMOTE nearest neighbours k (default 5)")
    g.add_argument("--smote-percentage", type=int, default=None, help="SMOTE oversampling percentage (default 100)")
    g.add_argument("--svm-cost", type=float, default=None, help="linear SVM cost (default 0.04)")
    g.add_argument("--svm-tolerance", type=float, default=None, help="SVM relative duality gap target (default 1e-4)")
    g.add_argument("--svm-max-epochs", type=int, default=None, help="SVM iteration cap (default 1000)")
    g.add_argument("--cfc-b", type=float, default=None, help="CFC inner-class base b (default e = 2.71828)")
    g.add_argument("--multilingual", action="store_true", default=None,
                   help="tree-only mode on link and content features (default off; forced for task 3)")
    g.add_argument("--news-postprocess", action="store_true", default=None,
                   help="lower News confidence on pairwise non-News verdicts (default off)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="webquality", description="Rank web hosts by genre, quality facets and utility score.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", help="write a synthetic train/test corpus")
    p.add_argument("--out-dir", type=Path, required=True, help="directory to create train/ and test/ in")
    p.add_argument("--seed", type=int, default=1, help="generator seed (default: %(default)s)")
    p.add_argument("--n-train", type=int, default=500, help="training hosts (default: %(default)s)")
    p.add_argument("--n-test", type=int, default=200, help="test hosts (default: %(default)s)")
    p.add_argument("--signal", type=float, default=3.0, help="planted mean shift in standard deviations (default: %(default)s)")
    p.add_argument("--vocab-size", type=int, default=2000, help="term dictionary size (default: %(default)s)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = sub.add_parser("ingest-check", help="parse a data directory and print a summary")
    p.add_argument("data_dir", type=Path, help="directory with link.tsv, content.tsv and optional files")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = sub.add_parser("train", help="train the ensemble and save it")
    _common(p, ["train-dir", "model-dir"])
    p.add_argument("--task", type=int, choices=(1, 2, 3), default=None, help="task (default 2; 3 implies multilingual)")
    _classifier_flags(p)

    p = sub.add_parser("predict", help="vote a saved ensemble over test hosts")
    _common(p, ["test-dir", "model-dir", "out-dir"])
    p.add_argument("--news-postprocess", action="store_true", default=None,
                   help="lower News confidence on pairwise non-News verdicts (default off)")

    p = sub.add_parser("rank", help="rank predicted hosts by utility score")
    _common(p, ["out-dir"])

    p = sub.add_parser("evaluate", help="NDCG of the written rankings against test labels")
    _common(p, ["test-dir", "out-dir"])
    p.add_argument("--task", type=int, choices=(1, 2, 3), default=None, help="task (default 2)")

    p = sub.add_parser("run-task", help="train, predict, rank and evaluate one task")
    _common(p, ["train-dir", "test-dir", "out-dir"])
    p.add_argument("--task", type=int, choices=(1, 2, 3), default=None, help="task (default 2)")
    _classifier_flags(p)
    return parser


_OVERRIDES = {
    "confidence_factor": ("tree", "confidence_factor"),
    "min_instances": ("tree", "min_instances"),
    "smote_k": ("smote", "k_neighbors"),
    "smote_percentage": ("smote", "percentage"),
    "svm_cost": ("svm", "cost"),
    "svm_tolerance": ("svm", "tolerance"),
    "svm_max_epochs": ("svm", "max_epochs"),
    "cfc_b": ("cfc", "b"),
}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if getattr(args, "config", None) else RunConfig()
    ns = vars(args)
    for name in ("train_dir", "test_dir", "model_dir", "out_dir", "task", "seed", "jobs", "news_postprocess"):
        if ns.get(name) is not None:
            setattr(cfg, name, ns[name])
    if ns.get("multilingual"):
        cfg.mode = "multilingual"
    for flag, (section, key) in _OVERRIDES.items():
        if ns.get(flag) is not None:
            setattr(cfg, section, {**getattr(cfg, section), key: ns[flag]})
    cfg.validate()
    return cfg


def _cmd_synth(args) -> None:
    spec = SynthSpec(n_train=args.n_train, n_test=args.n_test, signal=args.signal, seed=args.seed,
                     vocab_size=args.vocab_size)
    train, test = generate(spec, args.out_dir)
    print(f"wrote {train} and {test}")


def _cmd_ingest_check(args) -> None:
    ds = load_dataset(args.data_dir, with_terms=True, with_pages=True)
    print(f"hosts\t{len(ds.hosts)}")
    print(f"link_features\t{len(ds.hosts[0].link.values) if ds.hosts else 0}")
    print(f"content_features\t{len(ds.hosts[0].content.values) if ds.hosts else 0}")
    print(f"dictionary_terms\t{len(ds.dictionary.entries) if ds.dictionary else 0}")
    print(f"hosts_with_pages\t{len(ds.pages)}")
    print(f"labelled_hosts\t{len(ds.labels)}")


def _cmd_train(cfg: RunConfig) -> None:
    ecfg = cfg.ensemble()
    full = not ecfg.multilingual
    train_dir = cfg.need("train_dir")
    train = load_dataset(train_dir, with_terms=full, with_pages=full)
    if not train.labels:
        raise FileNotFoundError(f"training labels not found: {train_dir / LABELS_FILE}")
    model = train_ensemble(train, ecfg)
    save_ensemble(model, cfg.need("model_dir"))
    print(f"model written to {cfg.model_dir}")


def _cmd_predict(cfg: RunConfig) -> None:
    model = load_ensemble(cfg.need("model_dir"))
    full = not model.multilingual
    test = load_dataset(cfg.need("test_dir"), with_terms=full, with_pages=full)
    output = predict_all(model, test, cfg.news_postprocess, cfg.jobs)
    out = cfg.need("out_dir")
    out.mkdir(parents=True, exist_ok=True)
    write_predictions(out / "predictions.tsv", output)
    write_assignments(out / "genres.tsv", output)
    write_category_rankings(out / "category_rankings.tsv", output)
    print(f"predictions written to {out}")


def _cmd_rank(cfg: RunConfig) -> None:
    out = cfg.need("out_dir")
    preds = read_predictions(out / "predictions.tsv")
    assigned = read_assignments(out / "genres.tsv")
    conf = genre_confidences(preds, assigned)
    ranked = rank_by_quality([(h, assigned[h]) for h in sorted(assigned)], conf)
    write_quality_ranking(out / "ranking.tsv", ranked, conf)
    print(f"ranking written to {out / 'ranking.tsv'}")


def _cmd_evaluate(cfg: RunConfig) -> None:
    test_dir, out = cfg.need("test_dir"), cfg.need("out_dir")
    labels_path = test_dir / LABELS_FILE
    if not labels_path.exists():
        raise FileNotFoundError(f"test labels not found: {labels_path}")
    truth = load_dataset(test_dir, with_terms=False, with_pages=False).labels
    task = Task(cfg.task)
    if task is Task.TASK1:
        rankings = rankings_from_predictions(read_predictions(out / "predictions.tsv"))
    else:
        name = "multilingual" if task is Task.TASK3 else "english"
        rankings = {name: read_quality_ranking(out / "ranking.tsv")}
    rep = report(task, rankings, truth)
    write_report(out / "report.tsv", rep)
    print("\n".join(rep.rows()))


def _cmd_run_task(cfg: RunConfig) -> None:
    result = run_task(Task(cfg.task), cfg.need("train_dir"), cfg.need("test_dir"), cfg.need("out_dir"),
                      cfg.ensemble())
    print("\n".join(result.report.rows()))


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "rank": _cmd_rank,
    "evaluate": _cmd_evaluate,
    "run-task": _cmd_run_task,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            _cmd_synth(args)
        elif args.command == "ingest-check":
            _cmd_ingest_check(args)
        else:
            _COMMANDS[args.command](resolve_config(args))
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001 - last-resort mapping to exit code 3
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
