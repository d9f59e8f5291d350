"""Command-line front end: train, evaluate, classify, inspect.

Exit codes: 0 success, 1 usage, 2 data error, 3 model or write error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifier import ConfusionMatrix
from .evolution import GAConfig
from .grouping import GroupingConfig, format_groups_file, parse_groups_file, published_regions
from .imaging import (DataError, LoaderOptions, class_overlaps, load_dataset, normalize, read_pgm, to_bytes,
                      write_pgm)
from .partitions import Chromosome, FuzzyParams, validate
from .pipeline import (EvaluationReport, ModelFormatError, TwoPassModel, classify_two_pass, evaluate,
                       load_model, model_to_json, train)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3

log = logging.getLogger("fuzzygeno")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# config keys -> (argparse dest, type)
CONFIG_KEYS = {
    "data": str, "out": str, "model": str, "report_dir": str, "groups_file": str,
    "seed": int, "pop": int, "generations": int, "stall": int, "tournament": int,
    "crossover": float, "mutation": float, "elites": int, "min_cuts": int, "max_cuts": int,
    "ramp": int, "pair_threshold": int, "region_threshold": float,
    "invert": bool, "idx": bool, "published_regions": bool,
}


@dataclass
class RunConfig:
    data: str | None = None
    model: str | None = None
    report_dir: str | None = None
    groups_file: str | None = None
    ga: GAConfig = field(default_factory=GAConfig)
    fuzzy: FuzzyParams = field(default_factory=FuzzyParams)
    grouping: GroupingConfig = field(default_factory=GroupingConfig)
    loader: LoaderOptions = field(default_factory=LoaderOptions)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; dashes and underscores are interchangeable."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config line {raw.strip()!r}")
        kind = CONFIG_KEYS[key]
        try:
            out[key] = _parse_bool(value) if kind is bool else kind(value.strip())
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def run_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file and explicit flags (flags win)."""
    settings = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            settings[key] = value
    d = GAConfig()
    try:
        ga = GAConfig(
            population_size=settings.get("pop", d.population_size),
            max_generations=settings.get("generations", d.max_generations),
            stall_generations=settings.get("stall", d.stall_generations),
            tournament_size=settings.get("tournament", d.tournament_size),
            crossover_prob=settings.get("crossover", d.crossover_prob),
            mutation_prob=settings.get("mutation", d.mutation_prob),
            elite_count=settings.get("elites", d.elite_count),
            cut_bounds=(settings.get("min_cuts", d.cut_bounds[0]), settings.get("max_cuts", d.cut_bounds[1])),
            seed=settings.get("seed", d.seed),
        )
        fuzzy = FuzzyParams(settings.get("ramp", FuzzyParams().ramp))
        g = GroupingConfig()
        grouping = GroupingConfig(
            pair_threshold=settings.get("pair_threshold", g.pair_threshold),
            region_threshold=settings.get("region_threshold", g.region_threshold),
            region_overrides=published_regions() if settings.get("published_regions") else {},
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return RunConfig(
        data=settings.get("data"),
        model=settings.get("out") or settings.get("model"),
        report_dir=settings.get("report_dir"),
        groups_file=settings.get("groups_file"),
        ga=ga, fuzzy=fuzzy, grouping=grouping,
        loader=LoaderOptions(invert=bool(settings.get("invert")), idx=bool(settings.get("idx"))),
    )


# ----------------------------------------------------------------- reports

def accuracy_lines(report: EvaluationReport) -> str:
    def line(name, cm: ConfusionMatrix):
        correct = int(np.trace(cm.counts))
        return f"{name} accuracy: {correct}/{cm.total} = {correct / cm.total:.6f}\n"
    return line("coarse", report.coarse_confusion) + line("two-pass", report.final_confusion)


def summary_text(model: TwoPassModel, report: EvaluationReport) -> str:
    parts = [accuracy_lines(report), f"coarse chromosome: {model.coarse.chromosome}\n",
             f"groups: {len(model.groups)}\n"]
    for g in model.groups:
        rate = report.group_rates.get(g.members)
        rate_text = f"{float(rate):.6f}" if rate is not None else "-"
        parts.append(f"group {','.join(map(str, g.members))}: region {g.spec.region}; "
                     f"chromosome {g.chromosome}; rate {rate_text}\n")
    return "".join(parts)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


# ---------------------------------------------------------------- commands

def cmd_train(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    data_path = _require(cfg.data, "--data")
    out = Path(_require(cfg.model, "--out"))
    data = load_dataset(data_path, cfg.loader)
    explicit = None
    if cfg.groups_file:
        try:
            explicit = parse_groups_file(Path(cfg.groups_file).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read groups file {cfg.groups_file}: {exc.strerror}") from None
        except ValueError as exc:
            raise DataError(f"groups file {cfg.groups_file}: {exc}") from None
    model, _, trace = train(data, cfg.ga, cfg.fuzzy, cfg.grouping, explicit)
    report = evaluate(data, model)
    try:
        _write(out, model_to_json(model))
        if cfg.report_dir:
            rd = Path(cfg.report_dir)
            _write(rd / "coarse_confusion.tsv", report.coarse_confusion.to_tsv())
            _write(rd / "two_pass_confusion.tsv", report.final_confusion.to_tsv())
            _write(rd / "coarse_trace.tsv", trace.to_tsv())
            for g in model.groups:
                if g.trace is not None:
                    _write(rd / f"group_{'-'.join(map(str, g.members))}_trace.tsv", g.trace.to_tsv())
            _write(rd / "groups.txt", format_groups_file([g.spec for g in model.groups]))
            _write(rd / "summary.txt", summary_text(model, report))
    except OSError as exc:
        raise ModelFormatError(f"cannot write output: {exc}") from None
    sys.stdout.write(summary_text(model, report))
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    model = load_model(_require(args.model, "--model"))
    data = load_dataset(_require(cfg.data, "--data"), cfg.loader)
    report = evaluate(data, model)
    coarse_tsv = report.coarse_confusion.to_tsv()
    final_tsv = report.final_confusion.to_tsv()
    sys.stdout.write(accuracy_lines(report))
    sys.stdout.write("\ncoarse confusion\n" + coarse_tsv + "\ntwo-pass confusion\n" + final_tsv)
    if cfg.report_dir:
        try:
            rd = Path(cfg.report_dir)
            _write(rd / "coarse_confusion.tsv", coarse_tsv)
            _write(rd / "two_pass_confusion.tsv", final_tsv)
            _write(rd / "summary.txt", summary_text(model, report))
        except OSError as exc:
            raise ModelFormatError(f"cannot write output: {exc}") from None
    return EXIT_OK


def _format_scores(scores: dict[int, float]) -> str:
    return " ".join(f"{c}={s:.6f}" for c, s in sorted(scores.items()))


def _format_cells(features: np.ndarray, ch: Chromosome) -> str:
    grid = features.reshape(len(ch.h_cuts) - 1, len(ch.v_cuts) - 1)
    return "".join("  " + " ".join(f"{v:.4f}" for v in row) + "\n" for row in grid)


def cmd_classify(args: argparse.Namespace) -> int:
    model = load_model(_require(args.model, "--model"))
    img = normalize(read_pgm(_require(args.image, "--image")), invert=args.invert)
    result = classify_two_pass(img, model)
    group = ",".join(map(str, result.group_used)) if result.group_used else "-"
    lines = [f"final: {result.final_prediction.label}",
             f"coarse: {result.coarse_prediction.label}",
             f"group: {group}",
             f"coarse scores: {_format_scores(result.coarse_prediction.scores)}"]
    if result.group_used:
        lines.append(f"group scores: {_format_scores(result.final_prediction.scores)}")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.trace:
        ch = model.coarse.chromosome
        sys.stdout.write(f"coarse cells ({ch}):\n" + _format_cells(model.coarse.features(img[None])[0], ch))
        if result.group_used:
            g = model.groups[model.group_of(result.coarse_prediction.label)]
            sys.stdout.write(f"group cells ({g.chromosome}):\n"
                             + _format_cells(g.models.features(img[None])[0], g.chromosome))
    return EXIT_OK


def partition_picture(ch: Chromosome, background: np.ndarray | None = None) -> np.ndarray:
    """A 32x32 byte image with the chromosome's cut lines drawn at full intensity."""
    pic = np.zeros((32, 32), dtype=np.uint8) if background is None else to_bytes(background) // 2
    r = ch.region
    for c in ch.h_cuts:
        pic[c, r.left:r.right + 1] = 255
    for c in ch.v_cuts:
        pic[r.top:r.bottom + 1, c] = 255
    return pic


def cmd_inspect(args: argparse.Namespace) -> int:
    if args.what == "overlaps":
        cfg = run_config(args)
        data = load_dataset(_require(cfg.data, "--data"), cfg.loader)
        out = Path(_require(args.out, "--out"))
        try:
            out.mkdir(parents=True, exist_ok=True)
            for c, img in class_overlaps(data).items():
                write_pgm(out / f"overlap_{c}.pgm", to_bytes(img))
        except OSError as exc:
            raise ModelFormatError(f"cannot write output: {exc}") from None
        sys.stdout.write("".join(f"overlap_{c}.pgm\n" for c in data.classes))
        return EXIT_OK

    if args.chromosome:
        try:
            ch = Chromosome.parse(args.chromosome)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        problems = validate(ch, bounds=None)
        if problems:
            raise UsageError("invalid chromosome: " + "; ".join(problems))
        chromosomes = [ch]
    else:
        model = load_model(_require(args.model, "--model"))
        chromosomes = [model.coarse.chromosome] + [g.chromosome for g in model.groups]
        if args.group is not None:
            if not 0 <= args.group < len(model.groups):
                raise UsageError(f"model has {len(model.groups)} groups; no group {args.group}")
            chromosomes = [model.groups[args.group].chromosome]
    sys.stdout.write("".join(f"{ch}\n" for ch in chromosomes))
    if args.out:
        background = normalize(read_pgm(args.image), args.invert) if args.image else None
        try:
            write_pgm(args.out, partition_picture(chromosomes[0], background))
        except OSError as exc:
            raise ModelFormatError(f"cannot write output: {exc}") from None
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="dataset directory (class subdirectories of PGM files, or IDX with --idx)")
    p.add_argument("--invert", action="store_true", help="treat dark pixels as ink")
    p.add_argument("--idx", action="store_true", help="read images.idx / labels.idx from --data")
    p.add_argument("--config", help="flat key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fuzzygeno", description="Two-pass fuzzy-genetic image classifier.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="evolve partitions and write a model file")
    _add_data_flags(t)
    t.add_argument("--out", help="model file to write")
    t.add_argument("--report-dir", help="directory for confusion matrices, traces and summary")
    t.add_argument("--seed", type=int)
    t.add_argument("--pop", type=int, help="population size")
    t.add_argument("--generations", type=int, help="generation cap")
    t.add_argument("--stall", type=int, help="stop after this many generations without improvement")
    t.add_argument("--ramp", type=int, help="fuzzy ramp half-width in pixels")
    t.add_argument("--pair-threshold", type=int, help="min symmetric confusion count to link two classes")
    t.add_argument("--region-threshold", type=float, help="overlap difference that marks a confusion pixel")
    t.add_argument("--groups-file", help="fixed groups (members=a,b; region=t,l,b,r per line)")
    t.add_argument("--published-regions", action="store_true",
                   help="use the published digit-pair regions when those groups form")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="report both passes' confusion matrices")
    _add_data_flags(e)
    e.add_argument("--model", help="model file")
    e.add_argument("--report-dir")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("classify", help="classify one PGM image")
    c.add_argument("--model", help="model file")
    c.add_argument("--image", help="PGM file")
    c.add_argument("--invert", action="store_true")
    c.add_argument("--trace", action="store_true", help="also print per-cell features")
    c.set_defaults(func=cmd_classify)

    i = sub.add_parser("inspect", help="dump overlap images or partitions")
    isub = i.add_subparsers(dest="what", required=True, parser_class=_Parser)
    o = isub.add_parser("overlaps", help="write per-class overlap images as PGM")
    _add_data_flags(o)
    o.add_argument("--out", help="output directory")
    o.set_defaults(func=cmd_inspect)
    pp = isub.add_parser("partitions", help="print chromosomes; optionally draw one")
    src = pp.add_mutually_exclusive_group()
    src.add_argument("--model", help="model file")
    src.add_argument("--chromosome", help="chromosome text, e.g. '0,8,31 | 0,16,31'")
    pp.add_argument("--group", type=int, help="only this group's chromosome (0-based)")
    pp.add_argument("--out", help="PGM file with the cut lines drawn in")
    pp.add_argument("--image", help="PGM drawn underneath the cut lines")
    pp.add_argument("--invert", action="store_true")
    pp.set_defaults(func=cmd_inspect)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fuzzygeno: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"fuzzygeno: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ModelFormatError as exc:
        print(f"fuzzygeno: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
