"""Command line entry point: ``schema-aug <subcommand> ...``.

Every subcommand is a thin composition of the library modules. Metric values
never affect the exit status; only operational failures do (1), and bad
usage exits with 2.
"""

from __future__ import annotations

import argparse
import functools
import json
import logging
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import ablation, adapters, augmentation, overlap
from .augmentation import AugmentationPlan, RenameAssignment
from .corpus import Corpus, DialogueSample, dump_corpus, filter_training, iter_jsonl, load_corpus
from .inference import InferenceConfig, JsonlAppender, MockSpec, infer_mock, infer_remote
from .metrics import TGA_MODES, evaluate
from .prompt_renderer import PromptTemplate, render_prompt
from .schema_model import (
    BUNDLED_SCHEMAS,
    Schema,
    dump_schema,
    resolve_schema,
    restrict_to_domains,
    schema_from_dict,
)
from .state_codec import ParseOutcome, extract_and_parse

log = logging.getLogger("schema_aug")

DEFAULT_SEED = 42


def _domains(text):
    return [d.strip() for d in text.split(",") if d.strip()] if text else []


def _write_jsonl(path, records):
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    return n


def _map(func, items, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(func, items, chunksize=64)
    else:
        yield from map(func, items)


# --- records: canonical corpus or augmented output ------------------------------


def read_records(path, schema: Schema = None):
    """Load a canonical corpus or augmented-record file.

    Returns ``(corpus, per_sample_schemas, assignments)``; the last two are
    ``None`` for canonical input.
    """
    rows = list(iter_jsonl(path))
    if rows and "assignment" in rows[0][1]:
        samples, schemas, assignments = [], {}, {}
        schema_cache = {}
        for _, rec in rows:
            s = DialogueSample.from_dict(rec)
            key = json.dumps(rec["schema"], sort_keys=True)
            if key not in schema_cache:
                schema_cache[key] = schema_from_dict(rec["schema"])
            samples.append(s)
            schemas[s.sample_id] = schema_cache[key]
            assignments[s.sample_id] = RenameAssignment.from_dict(rec["assignment"])
        # only used to validate state keys; first definition of each name wins
        first = {}
        for sch in schema_cache.values():
            for slot in sch:
                first.setdefault(slot.full_name, slot)
        union = Schema(first.values())
        return Corpus(samples, union), schemas, assignments
    if schema is None:
        raise ValueError(f"{path}: canonical corpus input needs --schema")
    return load_corpus(path, schema), None, None


# --- convert --------------------------------------------------------------------


def cmd_convert(args):
    inputs = args.inputs
    if args.dataset == "canonical":
        if len(inputs) != 1:
            raise ValueError("canonical passthrough takes exactly one --in file")
        schema = resolve_schema(args.schema)
        load_corpus(inputs[0], schema)  # validate before copying
        shutil.copyfile(inputs[0], args.out)
    else:
        schema_src = args.schema
        if schema_src is None:
            local = [Path(p) / "schema.json" for p in inputs if Path(p).is_dir()]
            local = [p for p in local if p.exists()]
            schema_src = str(local[0]) if local else args.dataset
        schema = resolve_schema(schema_src)
        samples = list(adapters.ADAPTERS[args.dataset](inputs, schema))
        corpus = Corpus(samples, schema)
        dump_corpus(corpus, args.out)
    if args.schema_out:
        dump_schema(schema, args.schema_out)
    log.info("wrote %s", args.out)


# --- augment --------------------------------------------------------------------


def _augment_one(plan, schema, sample):
    return augmentation.augment_sample(plan, schema, sample).to_dict()


def cmd_augment(args):
    schema = resolve_schema(args.schema)
    corpus = load_corpus(args.inputs, schema)
    holdout = set(_domains(args.holdout))
    if args.split == "train":
        corpus = filter_training(corpus, holdout)
        seen = restrict_to_domains(schema, set(schema.domains) - holdout)
        corpus = Corpus(corpus.samples, seen)
    elif holdout - set(schema.domains):
        raise ValueError(f"unknown holdout domain(s): {', '.join(sorted(holdout - set(schema.domains)))}")

    kind = args.plan
    if args.split == "test" and not args.augment_test:
        kind = "none"
    rmap = None
    if kind != "none":
        rmap = augmentation.load_replacement_map(args.map, kind) if args.map else augmentation.bundled_map(kind)
    plan = AugmentationPlan(kind, args.variant, args.seed, rmap)
    # fail fast on coverage problems before any worker starts
    augmentation.assign_renames(plan, corpus.schema, "")
    if args.jobs > 1:
        records = _map(functools.partial(_augment_one, plan, corpus.schema), corpus.samples, args.jobs)
    else:
        records = (r.to_dict() for r in augmentation.augment_corpus(plan, corpus))
    n = _write_jsonl(args.out, records)
    log.info("wrote %d augmented records to %s", n, args.out)


# --- render ---------------------------------------------------------------------


def _render_one(template, mode, shuffle, item):
    schema, sample = item
    if shuffle is not None:
        schema = ablation.shuffle_schema(schema, shuffle[0], shuffle[1])
    return render_prompt(template, schema, sample, mode).to_dict()


def cmd_render(args):
    overrides = {"include_schema": False} if args.no_schema else {}
    template = PromptTemplate.from_file(args.template, **overrides) if args.template else PromptTemplate(**overrides)
    base = resolve_schema(args.schema) if args.schema else None
    corpus, schemas, _ = read_records(args.inputs, base)
    items = [((schemas[s.sample_id] if schemas else corpus.schema), s) for s in corpus]
    shuffle = (args.seed, args.scope) if args.ablate_shuffle else None
    func = functools.partial(_render_one, template, args.mode, shuffle)
    n = _write_jsonl(args.out, _map(func, items, args.jobs))
    log.info("wrote %d prompts to %s", n, args.out)


# --- infer ----------------------------------------------------------------------


def _done_ids(path):
    if not Path(path).exists():
        return set()
    return {rec["sample_id"] for _, rec in iter_jsonl(path)}


def cmd_infer(args):
    if args.mock:
        base = resolve_schema(args.schema) if args.schema else None
        # augmented records already hold states in the renamed vocabulary
        corpus, _, _ = read_records(args.refs, base)
        spec = MockSpec(args.mock, args.corrupt_rate, args.seed)
        n = _write_jsonl(args.out, (g.to_dict() for g in infer_mock(spec, corpus)))
        log.info("wrote %d mock generations to %s", n, args.out)
        return
    config = InferenceConfig(
        endpoint_url=args.endpoint,
        model_name=args.model,
        max_new_tokens=args.max_new_tokens,
        temperature=args.temperature,
        request_timeout=args.timeout,
        max_retries=args.max_retries,
        max_in_flight=args.max_in_flight,
    )
    config.validate()
    done = _done_ids(args.out) if args.resume else set()
    prompts = ((rec["sample_id"], rec["prompt"]) for _, rec in iter_jsonl(args.inputs) if rec["sample_id"] not in done)
    n = failures = 0
    with JsonlAppender(args.out, "a" if args.resume else "w") as out:
        for g in infer_remote(config, prompts):
            out.write(json.dumps(g.to_dict(), ensure_ascii=False))
            n += 1
            failures += g.error is not None
    log.info("wrote %d generations (%d failed) to %s", n, failures, args.out)


# --- evaluate -------------------------------------------------------------------


def load_predictions(path, assignments=None):
    """Parse a prediction file into ``sample_id -> ParseOutcome``.

    Records with a ``generation`` are parsed; records that already carry a
    ``status`` are taken as is. With ``assignments``, parsed states are mapped
    back to canonical slot names; names the assignment does not know are
    kept under an unmatched key so the turn scores as a miss.
    """
    preds = {}
    for _, rec in iter_jsonl(path):
        sid = rec["sample_id"]
        if "generation" in rec:
            out = extract_and_parse(rec["generation"])
        else:
            out = ParseOutcome.from_dict(rec)
        if out.ok and assignments is not None and sid in assignments:
            out = ParseOutcome(out.status, _invert_lenient(assignments[sid], out.state))
        preds[sid] = out
    return preds


def _invert_lenient(assignment, state):
    inverse = {v: k for k, v in assignment.identifiers.items()}
    return {inverse.get(k, "?unmapped-" + k): v for k, v in state.items()}


def cmd_evaluate(args):
    schema = resolve_schema(args.schema)
    refs = load_corpus(args.refs, schema)
    assignments = read_records(args.assignments)[2] if args.assignments else None
    preds = load_predictions(args.preds, assignments)
    report = evaluate(
        refs, preds, _domains(args.holdout), args.tga_mode,
        normalize=not args.strict_values, run_id=args.run_id,
    )
    text = report.to_json()
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if args.csv:
        path = Path(args.csv)
        header = not path.exists() or path.stat().st_size == 0
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(report.to_csv(header=header))
    if args.parsed_out:
        _write_jsonl(args.parsed_out, ({"sample_id": sid, **o.to_dict()} for sid, o in preds.items()))


# --- overlap --------------------------------------------------------------------


def cmd_overlap(args):
    schema = resolve_schema(args.schema)
    matrix = overlap.slot_matrix(schema)
    print(matrix.to_text())
    if args.csv:
        Path(args.csv).write_text(matrix.to_csv(), encoding="utf-8")
    if args.suggest_k is not None:
        ranked = overlap.suggest_holdout(schema, args.suggest_k)
        print()
        print(f"holdout suggestions (k={args.suggest_k}):")
        for combo, score in ranked[: args.top]:
            print(f"  {{{', '.join(combo)}}}  external_overlap={score}")
        if args.suggest_csv:
            Path(args.suggest_csv).write_text(overlap.suggestions_csv(ranked), encoding="utf-8")


# --- parser ---------------------------------------------------------------------


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="schema-aug", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with per-subcommand default overrides")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    schema_help = f"schema file, or a bundled name ({', '.join(BUNDLED_SCHEMAS)})"

    p = sub.add_parser("convert", help="convert native dialogue files to canonical JSONL")
    p.add_argument("--dataset", choices=["multiwoz", "spokenwoz", "canonical"], required=True)
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--schema", help=schema_help)
    p.add_argument("--schema-out")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("augment", help="apply schema augmentation to a corpus")
    p.add_argument("--plan", choices=["none", "ssa", "esa"], required=True)
    p.add_argument("--variant", choices=augmentation.VARIANTS, default="single")
    p.add_argument("--map", help="replacement map file (default: bundled map for the plan)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--holdout", default="", help="comma-separated target domains")
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--augment-test", action="store_true", help="augment the test split too")
    p.add_argument("--in", dest="inputs", required=True)
    p.add_argument("--schema", required=True, help=schema_help)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=_positive, default=1)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("render", help="render prompts (and targets) for a corpus")
    p.add_argument("--in", dest="inputs", required=True, help="canonical corpus or augmented records")
    p.add_argument("--schema", help=schema_help + "; required for canonical input")
    p.add_argument("--template", help="JSON file with prompt template fields")
    p.add_argument("--no-schema", action="store_true")
    p.add_argument("--mode", choices=["train", "infer"], default="infer")
    p.add_argument("--ablate-shuffle", action="store_true")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--scope", choices=ablation.SCOPES, default="joint")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=_positive, default=1)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("infer", help="obtain generations from an endpoint or a mock model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--endpoint", help="OpenAI-compatible base URL, e.g. http://localhost:8000/v1")
    src.add_argument("--mock", choices=["oracle", "empty", "corruptor", "garbler"])
    p.add_argument("--in", dest="inputs", help="rendered prompt records (endpoint mode)")
    p.add_argument("--refs", help="corpus or augmented records (mock mode)")
    p.add_argument("--schema", help=schema_help)
    p.add_argument("--model", default="default")
    p.add_argument("--max-new-tokens", type=int, default=256)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--max-in-flight", type=_positive, default=4)
    p.add_argument("--corrupt-rate", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--resume", action="store_true", help="skip sample_ids already in --out")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("evaluate", help="score predictions with JGA/TGA")
    p.add_argument("--refs", required=True, help="canonical reference corpus")
    p.add_argument("--schema", required=True, help=schema_help)
    p.add_argument("--preds", required=True)
    p.add_argument("--assignments", help="augmented records used to map predictions back")
    p.add_argument("--holdout", default="", help="comma-separated target domains")
    p.add_argument("--tga-mode", choices=TGA_MODES, default="projected")
    p.add_argument("--strict-values", action="store_true", help="compare values without normalization")
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="append a CSV row to this file")
    p.add_argument("--run-id", default="")
    p.add_argument("--parsed-out", help="write parsed predictions here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("overlap", help="domain/slot matrix and holdout suggestions")
    p.add_argument("--schema", required=True, help=schema_help)
    p.add_argument("--suggest-k", type=_positive)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--csv")
    p.add_argument("--suggest-csv")
    p.set_defaults(func=cmd_overlap)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    overrides = json.loads(Path(known.config).read_text(encoding="utf-8"))
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, defaults in overrides.items():
        if name not in subparsers.choices:
            parser.error(f"config names unknown subcommand {name!r}")
        subparsers.choices[name].set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "infer":
        if args.mock and not args.refs:
            parser.error("--mock needs --refs")
        if args.endpoint and not args.inputs:
            parser.error("--endpoint needs --in")
    try:
        args.func(args)
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
