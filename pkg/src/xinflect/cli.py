"""Command-line entry point: ``xinflect <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .conllu import load_treebank, merge_treebanks, parse_feats, save_treebank
from .errors import DataError, UsageError
from .experiment import (
    FEW_SHOT,
    ZERO_SHOT,
    ExperimentConfig,
    analysis_tsv,
    attachment_scores,
    correlation_analysis,
    correlations_tsv,
    format_correlations,
    format_results,
    parse_analysis_tsv,
    report_to_json,
    results_tsv,
    run_few_shot,
    run_zero_shot,
)
from .inflector import evaluate_inflector, load_inflector, save_inflector, train_inflector
from .parsing import KINDS, load_parser, parse_treebank, save_parser, train_parser
from .schema import conversion_report, format_rules, format_table, induce_postedit_rules, load_table, ud_to_um
from .unimorph import (
    MorphTag,
    covered_upos,
    default_pos_map,
    load_um,
    load_um_file,
    parse_pos_map,
    split_um,
    write_um,
)
from .xinflect import xinflect_report, xinflect_treebank

DEFAULT_SEED = 42


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as f:
        return f.read()


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _load_um(path: str, language: str = ""):
    if path == "-":
        return load_um(sys.stdin.buffer.read(), language, "<stdin>")
    return load_um_file(path, language)


def _pos_map(path: str | None):
    return default_pos_map() if path is None else parse_pos_map(_read_text(path), path)


def _table(args):
    return load_table(args.table, args.feature_map, args.upos_map, args.rules)


def _add_table_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--table", help="combined conversion table file (default: bundled table)")
    p.add_argument("--feature-map", help="UD Feature=Value to UniMorph mapping file, overrides the table's")
    p.add_argument("--upos-map", help="UPOS to UniMorph POS mapping file, overrides the table's")
    p.add_argument("--rules", help="post-editing rules file, appended to the table's rules")


# --- subcommands ---------------------------------------------------------------------


def cmd_split_um(args) -> int:
    lex = _load_um(args.um, args.language)
    split = split_um(lex, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = args.prefix or Path(args.um).stem
    for part in ("train", "dev", "test"):
        (out / f"{prefix}.{part}.tsv").write_bytes(write_um(getattr(split, part)))
    print(f"train={len(split.train)} dev={len(split.dev)} test={len(split.test)}")
    return 0


def cmd_train_inflector(args) -> int:
    lex = _load_um(args.um, args.language)
    train = split_um(lex, args.seed).train if args.split else lex
    model = train_inflector(train, context=args.context)
    save_inflector(model, args.out)
    print(f"memory={len(model.memory)} rules={sum(len(r) for r in model.suffix_rules.values())}")
    if args.eval:
        acc = evaluate_inflector(model, _load_um(args.eval, args.language))
        print(f"accuracy {100 * acc:.2f}")
    return 0


def cmd_inflect(args) -> int:
    model = load_inflector(args.model)
    if args.lemma is not None or args.tag is not None:
        if args.lemma is None or args.tag is None:
            raise UsageError("--lemma and --tag go together")
        queries = [(args.lemma, args.tag)]
    elif args.input:
        queries = []
        for lineno, line in enumerate(_read_text(args.input).splitlines(), start=1):
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise DataError("expected lemma<TAB>tag", source=args.input, lineno=lineno)
            queries.append((cols[0], cols[1]))
    else:
        raise UsageError("give --lemma and --tag, or --input")
    out = []
    for lemma, tag in queries:
        form, prov = model.inflect(lemma, MorphTag.parse(tag))
        out.append(f"{lemma}\t{tag}\t{form}\t{prov.value}" if args.verbose else form)
    _write_text(args.out, "\n".join(out) + "\n")
    return 0


def cmd_convert_feats(args) -> int:
    table = _table(args)
    if args.write_table:
        _write_text(args.write_table, format_table(table))
    if args.treebank:
        report = conversion_report(load_treebank(args.treebank), table)
        _write_text(args.out, report.format())
    elif args.upos:
        tag = ud_to_um(args.upos, parse_feats(args.feats), table)
        _write_text(args.out, f"{tag if tag is not None else 'NONE'}\n")
    elif not args.write_table:
        raise UsageError("give --upos (with --feats), --treebank or --write-table")
    return 0


def cmd_induce_rules(args) -> int:
    table = _table(args)
    ud = load_treebank(args.ud, args.language)
    um = _load_um(args.um, args.language)
    rules = induce_postedit_rules(ud, um, table, args.min_support, args.max_iters)
    _write_text(args.out, format_rules(rules, table))
    if args.write_table:
        _write_text(args.write_table, format_table(table.with_rules(table.postedit_rules + tuple(rules))))
    print(f"rules={len(rules)}", file=sys.stderr)
    return 0


def cmd_x_inflect(args) -> int:
    model = load_inflector(args.model)
    table = _table(args)
    source = load_treebank(args.source)
    if args.covered is not None:
        covered = {u for u in args.covered.split(",") if u}
    elif args.um:
        covered = covered_upos(_load_um(args.um).pos_tags(), _pos_map(args.pos_map))
    else:
        covered = covered_upos(model.pos_tags(), _pos_map(args.pos_map))
    out, stats = xinflect_treebank(source, model, table, covered, mark_misc=not args.no_mark, jobs=args.jobs)
    save_treebank(out, args.out)
    if args.stats:
        _write_text(args.stats, stats.to_json() if args.stats.endswith(".json") else stats.to_text())
    sys.stderr.write(xinflect_report(stats))
    return 0


def cmd_merge(args) -> int:
    tbs = [load_treebank(p) for p in args.inputs]
    save_treebank(merge_treebanks(tbs, name=args.name), args.out)
    return 0


def cmd_train_parser(args) -> int:
    parts = [load_treebank(p) for p in args.train]
    train = merge_treebanks(parts) if len(parts) > 1 else parts[0]
    model = train_parser(args.kind, train, args.epochs, args.seed)
    save_parser(model, args.out)
    return 0


def cmd_parse(args) -> int:
    model = load_parser(args.model)
    save_treebank(parse_treebank(model, load_treebank(args.input)), args.out)
    return 0


def cmd_eval(args) -> int:
    res = attachment_scores(load_treebank(args.gold), load_treebank(args.pred))
    print(f"UAS {res.uas:.2f} LAS {res.las:.2f}")
    return 0


def _run_experiment(args, mode: str) -> int:
    cfg = ExperimentConfig.load(args.config)
    overrides = {"mode": mode, "jobs": args.jobs}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.kinds:
        overrides["parsers"] = tuple(args.kinds.split(","))
    cfg = replace(cfg, **overrides)
    args.seed = cfg.seed
    report = run_zero_shot(cfg) if mode == ZERO_SHOT else run_few_shot(cfg)
    sys.stdout.write(format_results(report.rows))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.txt").write_text(format_results(report.rows), encoding="utf-8")
        (out / "results.tsv").write_text(results_tsv(report.rows), encoding="utf-8")
        (out / "report.json").write_text(report_to_json(report), encoding="utf-8")
        if report.analysis:
            (out / "analysis.tsv").write_text(analysis_tsv(report.analysis), encoding="utf-8")
    return 0


def cmd_zero_shot(args) -> int:
    return _run_experiment(args, ZERO_SHOT)


def cmd_few_shot(args) -> int:
    return _run_experiment(args, FEW_SHOT)


def cmd_analyze(args) -> int:
    rows = []
    for path in args.inputs:
        rows += parse_analysis_tsv(_read_text(path), path)
    cells = correlation_analysis(rows, strict=not args.allow_undefined)
    _write_text(args.out, format_correlations(cells))
    if args.tsv:
        _write_text(args.tsv, correlations_tsv(cells))
    return 0


# --- argument parsing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xinflect", description="Cross-lingual re-inflection of treebanks for low-resource parsing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose-log", action="store_true", help="log progress and warnings to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def command(name: str, func, help_text: str, seed: bool = True, seed_default=DEFAULT_SEED):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        if seed:
            p.add_argument("--seed", type=int, default=seed_default,
                           help=f"random seed (default: {seed_default if seed_default is not None else 'from config, else 42'})")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (default: 1)")
        return p

    p = command("split-um", cmd_split_um, "Split a UniMorph file 80/10/10 into train/dev/test.")
    p.add_argument("--um", required=True, help="UniMorph TSV file (lemma, form, tag); '-' for stdin")
    p.add_argument("--out-dir", required=True, help="directory for PREFIX.{train,dev,test}.tsv")
    p.add_argument("--prefix", help="output file prefix (default: input file stem)")
    p.add_argument("--language", default="", help="language code")

    p = command("train-inflector", cmd_train_inflector, "Train a suffix-transduction inflector.")
    p.add_argument("--um", required=True, help="UniMorph training TSV; '-' for stdin")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--split", action="store_true", help="train only on the seeded 80%% training split of --um")
    p.add_argument("--eval", help="UniMorph TSV to report exact-match accuracy on")
    p.add_argument("--language", default="", help="language code stored in the model")
    p.add_argument("--context", type=int, default=2, help="stem characters kept in rule variants (default: 2)")

    p = command("inflect", cmd_inflect, "Inflect (lemma, UniMorph tag) pairs.", seed=False)
    p.add_argument("--model", required=True, help="inflector model file")
    p.add_argument("--lemma", help="lemma to inflect")
    p.add_argument("--tag", help="UniMorph tag, e.g. V;PST;3;SG")
    p.add_argument("--input", help="file of lemma<TAB>tag lines; '-' for stdin")
    p.add_argument("--out", default="-", help="output file (default: stdout)")
    p.add_argument("--verbose", action="store_true", help="print lemma, tag, form and provenance")

    p = command("convert-feats", cmd_convert_feats, "Convert UD UPOS+FEATS to UniMorph tags.", seed=False)
    _add_table_flags(p)
    p.add_argument("--upos", help="UPOS of a single token")
    p.add_argument("--feats", default="_", help="FEATS of a single token (default: _)")
    p.add_argument("--treebank", help="CoNLL-U file to report conversion coverage for")
    p.add_argument("--write-table", help="write the effective conversion table to this file")
    p.add_argument("--out", default="-", help="output file (default: stdout)")

    p = command("induce-rules", cmd_induce_rules, "Induce post-editing rules from a UD treebank and UniMorph data of the same language.", seed=False)
    _add_table_flags(p)
    p.add_argument("--ud", required=True, help="CoNLL-U treebank")
    p.add_argument("--um", required=True, help="UniMorph TSV of the treebank's language")
    p.add_argument("--language", default="", help="language code")
    p.add_argument("--min-support", type=int, default=5, help="minimum anchor support per rule (default: 5)")
    p.add_argument("--max-iters", type=int, default=10, help="maximum induction rounds (default: 10)")
    p.add_argument("--out", default="-", help="rules file (default: stdout)")
    p.add_argument("--write-table", help="also write the table with the new rules appended")

    p = command("x-inflect", cmd_x_inflect, "Re-inflect a source treebank with a target-language inflector.", seed=False)
    _add_table_flags(p)
    p.add_argument("--source", required=True, help="source CoNLL-U treebank; '-' for stdin")
    p.add_argument("--model", required=True, help="target inflector model")
    p.add_argument("--out", required=True, help="output CoNLL-U; '-' for stdout")
    p.add_argument("--covered", help="comma-separated UPOS to re-inflect (default: derived from UniMorph POS)")
    p.add_argument("--um", help="target UniMorph file whose POS tags define the covered UPOS")
    p.add_argument("--pos-map", help="UniMorph POS to UPOS mapping file (default: bundled)")
    p.add_argument("--stats", help="write statistics; JSON if the name ends in .json, else key=value text")
    p.add_argument("--no-mark", action="store_true", help="do not add XInflected=Yes to MISC")

    p = command("merge", cmd_merge, "Concatenate CoNLL-U treebanks.", seed=False)
    p.add_argument("inputs", nargs="+", help="CoNLL-U files, in order")
    p.add_argument("--out", required=True, help="output CoNLL-U; '-' for stdout")
    p.add_argument("--name", default="merged", help="name of the merged treebank")

    p = command("train-parser", cmd_train_parser, "Train an SL or GB dependency parser.")
    p.add_argument("--kind", required=True, choices=KINDS, help="parser family")
    p.add_argument("--train", required=True, nargs="+", help="training CoNLL-U file(s)")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--epochs", type=int, default=10, help="training epochs (default: 10)")

    p = command("parse", cmd_parse, "Parse a CoNLL-U file, filling HEAD and DEPREL.", seed=False)
    p.add_argument("--model", required=True, help="parser model file")
    p.add_argument("--input", required=True, help="CoNLL-U input; '-' for stdin")
    p.add_argument("--out", default="-", help="CoNLL-U output (default: stdout)")

    p = command("eval", cmd_eval, "Attachment scores of a prediction against gold.", seed=False)
    p.add_argument("--gold", required=True, help="gold CoNLL-U")
    p.add_argument("--pred", required=True, help="predicted CoNLL-U")

    for name, func, text in (
        ("zero-shot", cmd_zero_shot, "Run the zero-shot experiment described by a JSON config."),
        ("few-shot", cmd_few_shot, "Run the few-shot experiment described by a JSON config."),
    ):
        p = command(name, func, text, seed_default=None)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out-dir", help="write results.txt, results.tsv, report.json (and analysis.tsv) here")
        p.add_argument("--epochs", type=int, help="override the config's epochs")
        p.add_argument("--kinds", help="override the config's parser kinds, e.g. SL,GB")

    p = command("analyze", cmd_analyze, "Pearson correlations of score deltas with data-size and overlap features.", seed=False)
    p.add_argument("inputs", nargs="+", help="analysis.tsv files written by zero-shot")
    p.add_argument("--out", default="-", help="aligned text table (default: stdout)")
    p.add_argument("--tsv", help="also write one row per cell as TSV")
    p.add_argument("--allow-undefined", action="store_true", help="report NaN for zero-variance cells instead of failing")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose_log else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        code = args.func(args)
    except UsageError as err:
        print(f"xinflect {args.command}: error: {err}", file=sys.stderr)
        code = 1
    except (DataError, UnicodeDecodeError) as err:
        print(f"xinflect {args.command}: data error: {err}", file=sys.stderr)
        code = 2
    except ValueError as err:
        print(f"xinflect {args.command}: error: {err}", file=sys.stderr)
        code = 1
    except OSError as err:
        print(f"xinflect {args.command}: error: {err.filename}: {err.strerror}", file=sys.stderr)
        code = 1
    seed = getattr(args, "seed", None)
    print(f"seed: {seed if seed is not None else DEFAULT_SEED}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
