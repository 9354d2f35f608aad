"""Zero-shot and few-shot transfer experiments, overlap statistics and correlation analysis."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from scipy import stats

from .conllu import Treebank, load_treebank, merge_treebanks
from .errors import DataError, UndefinedCorrelationError, UsageError
from .inflector import InflectorModel, train_inflector
from .parsing import KINDS, parse_treebank, train_parser
from .schema import ConversionTable, induce_postedit_rules, load_table
from .unimorph import UMLexicon, covered_pos, load_um_file, split_um
from .xinflect import XInflectionStats, xinflect_treebank

logger = logging.getLogger(__name__)

ZERO_SHOT = "zero-shot"
FEW_SHOT = "few-shot"
BASELINE = "baseline"
XINFLECTED = "x-inflected"
LR_ONLY = "lr-only"
ORIGINAL = "original"

FEATURES = ("um_forms", "um_lemmas", "src_train_sents", "pct_feats_shared", "pct_lemmas_shared")
METRICS = ("UAS", "LAS")
SIGNIFICANCE = 0.05

REPORT_NOTES = (
    "scores are percentages over all basic tokens, punctuation included",
    "deltas are system minus reference (x-inflected minus baseline; few-shot systems minus lr-only)",
    "overlap percentages are target-relative: share of target test types also found in the source training data",
)

PathLike = Union[str, os.PathLike]


# --- evaluation ------------------------------------------------------------------


@dataclass(frozen=True)
class EvalResult:
    uas: float
    las: float
    correct_heads: int
    correct_labeled: int
    total: int


def attachment_scores(gold: Treebank, pred: Treebank) -> EvalResult:
    """UAS/LAS over all basic tokens; MWT ranges and empty nodes are ignored."""
    if len(gold) != len(pred):
        raise UsageError(f"sentence counts differ: gold has {len(gold)}, prediction has {len(pred)}")
    heads = labeled = total = 0
    for k, (g, p) in enumerate(zip(gold.sentences, pred.sentences), start=1):
        if len(g) != len(p):
            raise UsageError(f"sentence {k}: gold has {len(g)} tokens, prediction has {len(p)}")
        for gt, pt in zip(g.tokens, p.tokens):
            if gt.id != pt.id:
                raise UsageError(f"sentence {k}: token id {gt.id} in gold is {pt.id} in prediction")
            total += 1
            if gt.head == pt.head:
                heads += 1
                labeled += gt.deprel == pt.deprel
    if total == 0:
        return EvalResult(0.0, 0.0, 0, 0, 0)
    return EvalResult(100.0 * heads / total, 100.0 * labeled / total, heads, labeled, total)


# --- configuration -----------------------------------------------------------------


@dataclass(frozen=True)
class TreebankSpec:
    language: str
    train: tuple[str, ...] = ()
    test: str | None = None
    um: str | None = None

    def load_train(self, name: str) -> Treebank:
        parts = [load_treebank(p, self.language) for p in self.train]
        return merge_treebanks(parts, name=name) if parts else Treebank((), self.language, name)


@dataclass(frozen=True)
class ExperimentConfig:
    target: TreebankSpec
    sources: tuple[TreebankSpec, ...] = ()
    um_path: str | None = None
    seed: int = 42
    epochs: int = 10
    parsers: tuple[str, ...] = KINDS
    mode: str = ZERO_SHOT
    table: str | None = None
    induce_rules: bool = True
    min_support: int = 5
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.mode not in (ZERO_SHOT, FEW_SHOT):
            raise UsageError(f"mode must be {ZERO_SHOT!r} or {FEW_SHOT!r}, got {self.mode!r}")
        bad = [k for k in self.parsers if k not in KINDS]
        if bad or not self.parsers:
            raise UsageError(f"parsers must be a non-empty subset of {KINDS}, got {list(self.parsers)}")
        if self.epochs < 1:
            raise UsageError("epochs must be >= 1")

    @classmethod
    def from_dict(cls, data: dict, base_dir: PathLike = ".", source: str = "<config>") -> "ExperimentConfig":
        base = Path(base_dir)

        def path(value):
            if value is None:
                return None
            return value if value == "-" or os.path.isabs(value) else str(base / value)

        def spec(d: dict, what: str) -> TreebankSpec:
            if not isinstance(d, dict) or "language" not in d:
                raise DataError(f"{what} needs a 'language' entry", source=source)
            train = d.get("train", [])
            train = [train] if isinstance(train, str) else list(train)
            return TreebankSpec(d["language"], tuple(path(p) for p in train), path(d.get("test")), path(d.get("um")))

        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise DataError(f"unknown config keys: {', '.join(unknown)}", source=source)
        if "target" not in data:
            raise DataError("config needs a 'target' entry", source=source)
        target = spec(data["target"], "target")
        um_path = path(data.get("um_path")) or target.um
        kwargs = {k: v for k, v in data.items() if k not in ("target", "sources", "um_path", "table", "parsers")}
        return cls(
            target=target,
            sources=tuple(spec(s, f"sources[{i}]") for i, s in enumerate(data.get("sources", []))),
            um_path=um_path,
            table=path(data.get("table")),
            parsers=tuple(data.get("parsers", KINDS)),
            **kwargs,
        )

    @classmethod
    def load(cls, path: PathLike) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as err:
            raise DataError(f"invalid JSON: {err.msg}", source=str(path), lineno=err.lineno) from None
        return cls.from_dict(data, Path(path).parent, str(path))


# --- x-inflection setup -------------------------------------------------------------


@dataclass
class XInflector:
    """A target-language inflector together with the UPOS values it covers."""

    model: InflectorModel
    covered: frozenset[str]
    lexicon: UMLexicon

    @classmethod
    def from_lexicon(cls, um: UMLexicon, seed: int) -> "XInflector":
        split = split_um(um, seed)
        return cls(train_inflector(split.train), frozenset(covered_pos(um)), um)


def pair_table(base: ConversionTable, source: Treebank, spec: TreebankSpec, cfg: ExperimentConfig) -> ConversionTable:
    """The conversion table for one source, with post-editing rules when its UM data is available."""
    if not cfg.induce_rules or not spec.um:
        return base
    um = load_um_file(spec.um, spec.language)
    rules = induce_postedit_rules(source, um, base, min_support=cfg.min_support)
    return base.with_rules(base.postedit_rules + tuple(rules))


# --- result rows --------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    setup: str
    target: str
    source: str
    kind: str
    system: str
    uas: float
    las: float
    delta_uas: float | None = None
    delta_las: float | None = None


@dataclass(frozen=True)
class AnalysisRow:
    pair: str
    kind: str
    delta_uas: float
    delta_las: float
    features: dict[str, float] = field(default_factory=dict)


@dataclass
class ExperimentReport:
    rows: list[ResultRow]
    analysis: list[AnalysisRow] = field(default_factory=list)
    xinflection: dict[str, XInflectionStats] = field(default_factory=dict)


def _train_eval(kind: str, train: Treebank, test: Treebank, epochs: int, seed: int) -> EvalResult:
    model = train_parser(kind, train, epochs, seed)
    return attachment_scores(test, parse_treebank(model, test))


def _run_all(jobs: list[tuple], n_workers: int) -> list[EvalResult]:
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(_train_eval, *zip(*jobs)))
    return [_train_eval(*job) for job in jobs]


def _require_test(cfg: ExperimentConfig) -> Treebank:
    if not cfg.target.test:
        raise UsageError("the experiment config names no target test file")
    if cfg.target.test != "-" and not os.path.exists(cfg.target.test):
        raise UsageError(f"missing target test file: {cfg.target.test}")
    return load_treebank(cfg.target.test, cfg.target.language)


def _xinflector(cfg: ExperimentConfig) -> XInflector:
    if not cfg.um_path:
        raise UsageError("the experiment config names no target UniMorph file (um_path)")
    return XInflector.from_lexicon(load_um_file(cfg.um_path, cfg.target.language), cfg.seed)


def _with_delta(row: ResultRow, ref: EvalResult, res: EvalResult) -> ResultRow:
    return ResultRow(row.setup, row.target, row.source, row.kind, row.system, row.uas, row.las,
                     res.uas - ref.uas, res.las - ref.las)


def run_zero_shot(cfg: ExperimentConfig, xinflector: XInflector | None = None) -> ExperimentReport:
    """Per source and parser kind: train on the original and on the x-inflected source, test on the target."""
    if cfg.mode != ZERO_SHOT:
        raise UsageError(f"run_zero_shot needs mode {ZERO_SHOT!r}, got {cfg.mode!r}")
    test = _require_test(cfg)
    xinf = xinflector or _xinflector(cfg)
    base_table = load_table(cfg.table)
    report = ExperimentReport([])
    jobs, keys = [], []
    for spec in cfg.sources:
        original = spec.load_train(spec.language)
        table = pair_table(base_table, original, spec, cfg)
        xinflected, xstats = xinflect_treebank(original, xinf.model, table, xinf.covered)
        report.xinflection[spec.language] = xstats
        for kind in cfg.parsers:
            for system, train in ((BASELINE, original), (XINFLECTED, xinflected)):
                jobs.append((kind, train, test, cfg.epochs, cfg.seed))
                keys.append((spec, original, kind, system))
    results = _run_all(jobs, cfg.jobs)

    target_um = xinf.lexicon.deduplicated()
    for i in range(0, len(results), 2):
        spec, original, kind, _ = keys[i]
        base, xres = results[i], results[i + 1]
        report.rows.append(ResultRow(ZERO_SHOT, cfg.target.language, spec.language, kind, BASELINE, base.uas, base.las))
        row = ResultRow(ZERO_SHOT, cfg.target.language, spec.language, kind, XINFLECTED, xres.uas, xres.las)
        report.rows.append(_with_delta(row, base, xres))
        feats_shared, lemmas_shared = overlap_stats(original, test)
        features = {
            "um_forms": float(len(target_um)),
            "um_lemmas": float(len(target_um.lemmas())),
            "src_train_sents": float(len(original)),
            "pct_feats_shared": feats_shared,
            "pct_lemmas_shared": lemmas_shared,
        }
        pair = f"{cfg.target.language}<-{spec.language}"
        report.analysis.append(AnalysisRow(pair, kind, xres.uas - base.uas, xres.las - base.las, features))
    return report


def run_few_shot(cfg: ExperimentConfig, xinflector: XInflector | None = None) -> ExperimentReport:
    """Per parser kind: target-only, target + original sources, target + x-inflected sources."""
    if cfg.mode != FEW_SHOT:
        raise UsageError(f"run_few_shot needs mode {FEW_SHOT!r}, got {cfg.mode!r}")
    test = _require_test(cfg)
    if not cfg.target.train:
        raise UsageError("few-shot experiments need a target training split")
    target_train = cfg.target.load_train(cfg.target.language)
    report = ExperimentReport([])
    originals, xinflected = [], []
    if cfg.sources:
        xinf = xinflector or _xinflector(cfg)
        base_table = load_table(cfg.table)
        for spec in cfg.sources:
            original = spec.load_train(spec.language)
            table = pair_table(base_table, original, spec, cfg)
            xtb, xstats = xinflect_treebank(original, xinf.model, table, xinf.covered)
            report.xinflection[spec.language] = xstats
            originals.append(original)
            xinflected.append(xtb)
    systems = (
        (LR_ONLY, target_train),
        (ORIGINAL, merge_treebanks([target_train, *originals], name=ORIGINAL)),
        (XINFLECTED, merge_treebanks([target_train, *xinflected], name=XINFLECTED)),
    )
    jobs = [(kind, train, test, cfg.epochs, cfg.seed) for kind in cfg.parsers for _, train in systems]
    results = _run_all(jobs, cfg.jobs)
    sources = "+".join(s.language for s in cfg.sources)
    for k, kind in enumerate(cfg.parsers):
        ref = results[3 * k]
        for j, (system, _) in enumerate(systems):
            res = results[3 * k + j]
            row = ResultRow(FEW_SHOT, cfg.target.language, sources, kind, system, res.uas, res.las)
            report.rows.append(row if j == 0 else _with_delta(row, ref, res))
    return report


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    return run_zero_shot(cfg) if cfg.mode == ZERO_SHOT else run_few_shot(cfg)


# --- overlap and correlation ------------------------------------------------------


def _pct_shared(target: set, source: set) -> float:
    return 100.0 * len(target & source) / len(target) if target else 0.0


def overlap_stats(source: Treebank, target: Treebank) -> tuple[float, float]:
    """(% of target FEATS pairs, % of target lemma types) also present in the source."""

    def feats(tb: Treebank) -> set:
        return {pair for s in tb.sentences for t in s.tokens for pair in t.feats}

    def lemmas(tb: Treebank) -> set:
        return {t.lemma for s in tb.sentences for t in s.tokens if t.lemma not in ("", "_")}

    return _pct_shared(feats(target), feats(source)), _pct_shared(lemmas(target), lemmas(source))


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson r and its two-sided p-value under the Student t distribution."""
    if len(x) != len(y):
        raise UsageError(f"pearson needs equal lengths, got {len(x)} and {len(y)}")
    n = len(x)
    if n < 3:
        raise UsageError(f"pearson needs at least 3 points, got {n}")
    dx = np.asarray(x, dtype=float) - np.mean(x)
    dy = np.asarray(y, dtype=float) - np.mean(y)
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a zero-variance vector")
    r = max(-1.0, min(1.0, float(dx @ dy) / math.sqrt(sxx * syy)))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(stats.t.sf(abs(t), n - 2))
    return r, min(1.0, max(0.0, p))


@dataclass(frozen=True)
class CorrelationCell:
    kind: str
    metric: str
    feature: str
    r: float
    p: float
    n: int

    @property
    def significant(self) -> bool:
        return self.p < SIGNIFICANCE


def correlation_analysis(rows: Sequence[AnalysisRow], strict: bool = True) -> list[CorrelationCell]:
    """One (r, p) cell per parser kind x metric x feature.

    With ``strict=False`` cells whose correlation is undefined get NaN
    instead of raising.
    """
    kinds = list(dict.fromkeys(row.kind for row in rows))
    cells = []
    for kind in kinds:
        group = [row for row in rows if row.kind == kind]
        if len(group) < 3:
            raise UsageError(f"correlation analysis needs at least 3 rows per parser kind; {kind} has {len(group)}")
        for metric in METRICS:
            deltas = [row.delta_uas if metric == "UAS" else row.delta_las for row in group]
            for feature in FEATURES:
                values = [row.features[feature] for row in group]
                try:
                    r, p = pearson(values, deltas)
                except UndefinedCorrelationError:
                    if strict:
                        raise UndefinedCorrelationError(
                            f"{kind} {metric} vs {feature}: correlation is undefined (zero variance)"
                        ) from None
                    r = p = math.nan
                cells.append(CorrelationCell(kind, metric, feature, r, p, len(group)))
    return cells


# --- report formatting ------------------------------------------------------------


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def _signed(value: float | None) -> str:
    return "-" if value is None else f"{value:+.2f}"


def _align(header: Sequence[str], body: Iterable[Sequence[str]]) -> str:
    table = [list(header), *(list(r) for r in body)]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in table) + "\n"


def _notes() -> str:
    return "".join(f"# {note}\n" for note in REPORT_NOTES)


RESULT_COLUMNS = ("setup", "target", "source", "kind", "system", "uas", "las", "delta_uas", "delta_las")


def format_results(rows: Sequence[ResultRow]) -> str:
    body = [(r.setup, r.target, r.source, r.kind, r.system, _fmt(r.uas), _fmt(r.las), _signed(r.delta_uas),
             _signed(r.delta_las)) for r in rows]
    return _notes() + _align([c.upper() if c in ("uas", "las") else c for c in RESULT_COLUMNS], body)


def _tsv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def results_tsv(rows: Sequence[ResultRow]) -> str:
    return _tsv(RESULT_COLUMNS, ([getattr(r, c) if not isinstance(getattr(r, c), float) else _fmt(getattr(r, c))
                                  for c in RESULT_COLUMNS] for r in rows))


ANALYSIS_COLUMNS = ("pair", "kind", "delta_uas", "delta_las", *FEATURES)


def analysis_tsv(rows: Sequence[AnalysisRow]) -> str:
    return _tsv(ANALYSIS_COLUMNS, ([r.pair, r.kind, repr(r.delta_uas), repr(r.delta_las),
                                    *(repr(r.features[f]) for f in FEATURES)] for r in rows))


def parse_analysis_tsv(text: str, source: str = "<analysis>") -> list[AnalysisRow]:
    reader = csv.reader(io.StringIO(text), delimiter="\t")
    header = next(reader, None)
    if header is None or tuple(header) != ANALYSIS_COLUMNS:
        raise DataError(f"expected header {' '.join(ANALYSIS_COLUMNS)}", source=source, lineno=1)
    rows = []
    for lineno, cols in enumerate(reader, start=2):
        if not cols:
            continue
        if len(cols) != len(ANALYSIS_COLUMNS):
            raise DataError(f"expected {len(ANALYSIS_COLUMNS)} columns, got {len(cols)}", source=source, lineno=lineno)
        try:
            values = [float(v) for v in cols[2:]]
        except ValueError as err:
            raise DataError(str(err), source=source, lineno=lineno) from None
        rows.append(AnalysisRow(cols[0], cols[1], values[0], values[1], dict(zip(FEATURES, values[2:]))))
    return rows


def format_correlations(cells: Sequence[CorrelationCell]) -> str:
    body = [(c.kind, c.metric, c.feature, f"{c.r:.3f}", f"{c.p:.4f}", "*" if c.significant else "", str(c.n))
            for c in cells]
    header = f"# '*' marks p < {SIGNIFICANCE}; p-values are two-sided\n"
    return _notes() + header + _align(("kind", "metric", "feature", "r", "p", "sig", "n"), body)


def correlations_tsv(cells: Sequence[CorrelationCell]) -> str:
    return _tsv(("kind", "metric", "feature", "r", "p", "significant", "n"),
                ([c.kind, c.metric, c.feature, repr(c.r), repr(c.p), int(c.significant), c.n] for c in cells))


def report_to_json(report: ExperimentReport) -> str:
    payload = {
        "rows": [asdict(r) for r in report.rows],
        "analysis": [asdict(r) for r in report.analysis],
        "xinflection": {k: v.to_dict() for k, v in report.xinflection.items()},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
