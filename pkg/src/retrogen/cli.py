"""Command-line surface.

Exit codes: 0 success, 1 validation/configuration problem, 2 backend or
transport failure. ``--backend-url`` falls back to the
RETROGEN_BACKEND_URL environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from .answers import load_ban_list
from .backend.client import HTTPBackendClient
from .backend.mock import DEFAULT_VOCAB, MockBackend
from .backend.server import BackendServer
from .errors import (
    BackendError,
    ContractViolation,
    PipelineAborted,
    RetrogenError,
    ValidationError,
)
from .evals import entropy as entropy_eval
from .evals import subjective as subjective_eval
from .evals.templates import instantiate_tf_templates, load_templates
from .pipeline import (
    ModelRoles,
    bbart_generate,
    edgar_generate,
    pair_to_jsonl_record,
    prep_bbart_dataset,
)
from .store import (
    RunManifest,
    atomic_write_json,
    corpus_fingerprint,
    emit_entropy_report,
    emit_subjective_report,
    load_corpus,
    load_narratives,
    persist_run,
    write_jsonl,
)
from .story import GenerationConfig, StoryState, render, split_sentences
from .trace import run_document

ENV_BACKEND_URL = "RETROGEN_BACKEND_URL"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage on stderr, exit 1 (not argparse's 2)
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="JSON config with GenerationConfig fields")
    parser.add_argument("--seed", type=int, help="run seed (unsigned 64-bit)")
    parser.add_argument("--backend-url", help=f"inference backend URL (or ${ENV_BACKEND_URL})")
    parser.add_argument("--out", metavar="PATH", help="output directory or file")


def _build_parser() -> _Parser:
    parser = _Parser(prog="retrogen", description="Backward story generation and its evaluation harnesses")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    gen = sub.add_parser("generate", help="run a story generator")
    gen_sub = gen.add_subparsers(dest="system", metavar="SYSTEM", parser_class=_Parser)

    edgar = gen_sub.add_parser("edgar", help="question-answering generator")
    _add_common(edgar)
    edgar.add_argument("--ending", required=True, metavar="FILE", help="file holding the ending prompt")
    edgar.add_argument("--corpus", required=True, metavar="DIR", help="directory of reference .txt documents")
    edgar.add_argument("--iterations", type=int)
    edgar.add_argument("--beam-width", type=int)
    edgar.add_argument("--max-length", type=int)
    edgar.add_argument("--ban-list", metavar="FILE", help="banned phrases file (default: packaged list)")
    edgar.add_argument("--qa-model", default=ModelRoles.qa)
    edgar.add_argument("--ranker-model", default=ModelRoles.ranker)
    edgar.add_argument("--infer-model", default=ModelRoles.infer)
    edgar.add_argument("--extract-model", default=ModelRoles.extract)
    edgar.add_argument("--workers", type=int, default=1, help="concurrent question answering")

    bbart = gen_sub.add_parser("bbart", help="backward seq2seq baseline")
    _add_common(bbart)
    bbart.add_argument("--ending", required=True, metavar="FILE")
    bbart.add_argument("--iterations", type=int)
    bbart.add_argument("--beam-width", type=int)
    bbart.add_argument("--max-length", type=int)
    bbart.add_argument("--model", default=ModelRoles.seq2seq)

    prep = sub.add_parser("prep-bbart", help="build source/target training pairs")
    _add_common(prep)
    prep.add_argument("--narratives", required=True, metavar="DIR", help="directory of narrative .txt files")
    prep.add_argument("--direction", choices=("backward", "literal"), default="backward")

    ev = sub.add_parser("eval", help="run an evaluation harness")
    ev_sub = ev.add_subparsers(dest="harness", metavar="HARNESS", parser_class=_Parser)

    ent = ev_sub.add_parser("entropy", help="agreement-entropy index")
    _add_common(ent)
    ent.add_argument("--responses", required=True, metavar="CSV")
    ent.add_argument("--stories", required=True, metavar="JSON")
    ent.add_argument("--screener-story", metavar="ID")
    ent.add_argument("--screener-key", metavar="JSON", help="question_id -> expected answer map")
    ent.add_argument("--min-correct", type=int, default=0)
    ent.add_argument("--max-pattern-period", type=int, default=3)

    subj = ev_sub.add_parser("subjective", help="pairwise preference tally")
    _add_common(subj)
    subj.add_argument("--responses", required=True, metavar="CSV")
    subj.add_argument("--pairs", required=True, metavar="JSON")
    subj.add_argument("--treatment", default="edgar", help="system the one-tailed test favors")

    tmpl = sub.add_parser("templates", help="true/false question templates")
    tmpl_sub = tmpl.add_subparsers(dest="kind", metavar="KIND", parser_class=_Parser)
    tf = tmpl_sub.add_parser("tf", help="list or instantiate the T/F templates")
    _add_common(tf)
    tf.add_argument("--story", metavar="FILE", help="story text to instantiate against")
    tf.add_argument("--slot", action="append", default=[], metavar="NAME=VALUE",
                    help="slot assignment (i/j/k are 0-based sentence indices)")
    tf.add_argument("--json", action="store_true", help="emit JSON instead of plain text")

    mock = sub.add_parser("mock-serve", help="serve the deterministic mock backend")
    mock.add_argument("--host", default="127.0.0.1")
    mock.add_argument("--port", type=int, default=0)
    mock.add_argument("--seed", type=int, default=0)
    mock.add_argument("--vocab", type=int, default=DEFAULT_VOCAB)
    mock.add_argument("--verbose", action="store_true")
    return parser


def _load_config(args) -> GenerationConfig:
    values: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ValidationError(f"config file not found: {path}")
        try:
            values = json.loads(path.read_text("utf-8"))
        except ValueError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from exc
    for flag, field_name in (
        ("seed", "seed"),
        ("iterations", "iterations"),
        ("beam_width", "beam_width"),
        ("max_length", "max_length"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            values[field_name] = value
    try:
        return GenerationConfig.from_dict(values)
    except TypeError as exc:
        raise ValidationError(f"bad config: {exc}") from exc


def _backend(args) -> HTTPBackendClient:
    url = getattr(args, "backend_url", None) or os.environ.get(ENV_BACKEND_URL)
    if not url:
        raise ValidationError(f"no backend: pass --backend-url or set ${ENV_BACKEND_URL}")
    return HTTPBackendClient(url)


def _read_ending(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"ending file not found: {p}")
    text = p.read_text("utf-8").strip()
    if not text:
        raise ValidationError(f"ending file is empty: {p}")
    return text


def _persist_generation(args, backend, config, models_dict, fingerprint, state, trace, ending_text) -> dict:
    manifest = RunManifest(
        config=config.to_dict(),
        backend_url=backend.base_url,
        models=models_dict,
        corpus_fingerprint=fingerprint,
    )
    out_dir = Path(args.out) if args.out else Path("runs") / manifest.run_id
    story_text = render(state)
    doc = run_document(trace, config, ending_text, story_text.split("\n"))
    paths = persist_run(out_dir, manifest, doc, story_text)
    print(f"run {manifest.run_id}")
    for name, path in sorted(paths.items()):
        print(f"  {name}: {path}")
    return paths


def _cmd_generate_edgar(args) -> int:
    config = _load_config(args)
    backend = _backend(args)
    ending_text = _read_ending(args.ending)
    corpus = load_corpus(args.corpus)
    ban = load_ban_list(args.ban_list)
    models = ModelRoles(
        qa=args.qa_model, ranker=args.ranker_model,
        infer=args.infer_model, extract=args.extract_model,
    )
    models_dict = {"qa": models.qa, "ranker": models.ranker,
                   "infer": models.infer, "extract": models.extract}
    fingerprint = corpus_fingerprint(corpus)
    try:
        state, trace = edgar_generate(
            ending_text, corpus, backend, config,
            models=models, ban_phrases=ban, workers=args.workers,
        )
    except PipelineAborted as exc:
        _persist_generation(args, backend, config, models_dict, fingerprint,
                            StoryState.from_ending(ending_text), exc.trace, ending_text)
        print(f"aborted: {exc.cause}", file=sys.stderr)
        return 2
    _persist_generation(args, backend, config, models_dict, fingerprint, state, trace, ending_text)
    return 0


def _cmd_generate_bbart(args) -> int:
    config = _load_config(args)
    backend = _backend(args)
    ending_text = _read_ending(args.ending)
    models_dict = {"seq2seq": args.model}
    try:
        state, trace = bbart_generate(ending_text, backend, config, model_id=args.model)
    except PipelineAborted as exc:
        _persist_generation(args, backend, config, models_dict, None,
                            StoryState.from_ending(ending_text), exc.trace, ending_text)
        print(f"aborted: {exc.cause}", file=sys.stderr)
        return 2
    _persist_generation(args, backend, config, models_dict, None, state, trace, ending_text)
    return 0


def _cmd_prep_bbart(args) -> int:
    config = _load_config(args)
    narratives = load_narratives(args.narratives)
    rng = random.Random(config.seed)
    pairs, skipped = prep_bbart_dataset(narratives, rng)
    records = [pair_to_jsonl_record(p, direction=args.direction) for p in pairs]
    out = Path(args.out) if args.out else Path("bbart_pairs.jsonl")
    write_jsonl(out, records)
    print(f"wrote {len(records)} pairs to {out}")
    for narrative_id, reason in skipped:
        print(f"skipped {narrative_id}: {reason}", file=sys.stderr)
    return 0


def _cmd_eval_entropy(args) -> int:
    stories = entropy_eval.load_stories_manifest(args.stories)
    responses = entropy_eval.load_responses_csv(args.responses, stories)
    eliminated: list[tuple[str, str]] = []
    exclude: list[str] = []
    if args.screener_story:
        if not args.screener_key:
            raise ValidationError("--screener-story requires --screener-key")
        key = json.loads(Path(args.screener_key).read_text("utf-8"))
        rules = entropy_eval.ScreeningRules(
            screener_story_id=args.screener_story,
            screener_key=key,
            min_correct=args.min_correct,
            max_pattern_period=args.max_pattern_period,
        )
        responses, eliminated = entropy_eval.screen(responses, rules)
        exclude = [args.screener_story]
    report = entropy_eval.aggregate(responses, exclude_stories=exclude)
    report.eliminated = eliminated
    for system, index in sorted(report.system_indices.items()):
        print(f"{system}: entropy index {index:.3f}")
    for pid, reason in eliminated:
        print(f"eliminated {pid}: {reason}", file=sys.stderr)
    if args.out:
        paths = emit_entropy_report(report, args.out)
        print(f"report: {paths['json']}")
    return 0


def _cmd_eval_subjective(args) -> int:
    pairs = subjective_eval.load_pairs_manifest(args.pairs)
    records = subjective_eval.load_records_csv(args.responses, pairs)
    counts = subjective_eval.tally(records, pairs)
    rep = subjective_eval.report(counts, treatment=args.treatment)
    print(subjective_eval.format_table(rep))
    if args.out:
        paths = emit_subjective_report(rep, args.out)
        print(f"report: {paths['json']}")
    return 0


def _cmd_templates_tf(args) -> int:
    if not args.story:
        templates = load_templates()
        if args.json:
            print(json.dumps(
                [{"id": t.template_id, "text": t.text, "requires": list(t.requires)} for t in templates],
                indent=2,
            ))
        else:
            for t in templates:
                print(f"{t.template_id:2d}. {t.text}  (needs: {', '.join(t.requires)})")
        return 0
    story = StoryState(generated=(), ending=tuple(split_sentences(Path(args.story).read_text("utf-8"))))
    assignments: dict = {}
    for item in args.slot:
        name, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"bad --slot (need NAME=VALUE): {item!r}")
        if name in ("i", "j", "k"):
            try:
                assignments[name] = int(value)
            except ValueError:
                raise ValidationError(f"slot {name} must be an integer index") from None
        elif name in ("object", "character"):
            assignments[name] = value
        else:
            raise ValidationError(f"unknown slot {name!r} (use i, j, k, object, character)")
    scaffolds = instantiate_tf_templates(story, assignments)
    if args.json:
        print(json.dumps(
            [{"id": s.template_id, "text": s.text, "slots": s.slots} for s in scaffolds], indent=2,
        ))
    else:
        for s in scaffolds:
            print(f"{s.template_id:2d}. {s.text}")
    if args.out:
        atomic_write_json(args.out, [{"id": s.template_id, "text": s.text, "slots": s.slots} for s in scaffolds])
    return 0


def _cmd_mock_serve(args) -> int:
    backend = MockBackend(seed=args.seed, vocab_size=args.vocab)
    server = BackendServer(backend, host=args.host, port=args.port, verbose=args.verbose)
    print(server.port, flush=True)
    server.run_forever()
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            if args.system == "edgar":
                return _cmd_generate_edgar(args)
            if args.system == "bbart":
                return _cmd_generate_bbart(args)
            parser.error("generate needs a system: edgar or bbart")
        elif args.command == "prep-bbart":
            return _cmd_prep_bbart(args)
        elif args.command == "eval":
            if args.harness == "entropy":
                return _cmd_eval_entropy(args)
            if args.harness == "subjective":
                return _cmd_eval_subjective(args)
            parser.error("eval needs a harness: entropy or subjective")
        elif args.command == "templates":
            if args.kind == "tf":
                return _cmd_templates_tf(args)
            parser.error("templates needs a kind: tf")
        elif args.command == "mock-serve":
            return _cmd_mock_serve(args)
        else:
            parser.error("a command is required")
    except (ValidationError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    except RetrogenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
