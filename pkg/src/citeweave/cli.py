"""Command-line interface.

Subcommands: ingest, ask, eval, serve, usage. Results go to stdout,
diagnostics to stderr; exit code 0 on success, 1 on domain errors, 2 on
usage errors (argparse's convention).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import Config
from .corpus import Corpus, load_corpus, save_corpus
from .errors import CiteweaveError
from .evaluation import (
    EvalItem,
    dataset_to_json,
    evaluate_run,
    generate_dataset,
    load_dataset,
)
from .gateway import PriceSheet, UsageLedger, cost_report
from .ingest import ingest_document
from .pipeline import build_gateway, params_from_config, run_query
from .retriever import retrieve
from .synthesizer import synthesize


def _load_config(path: str | None) -> Config:
    return Config.load(path) if path else Config()


def _load_or_new_corpus(path: str) -> Corpus:
    if Path(path).exists():
        return load_corpus(path)
    return Corpus(corpus_id=Path(path).stem or "corpus")


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    gateway = build_gateway(config)
    params = params_from_config(config)
    corpus = _load_or_new_corpus(args.corpus)
    for pdf_path in args.pdfs:
        pdf_bytes = Path(pdf_path).read_bytes()
        if args.layout_report:
            from .extractor import extract_document
            from .ingest import doc_id_for

            debug: dict = {}
            extract_document(pdf_bytes, doc_id_for(pdf_bytes), thresholds=config.thresholds, debug=debug)
            report_dir = Path(args.layout_report)
            report_dir.mkdir(parents=True, exist_ok=True)
            report_path = report_dir / f"{doc_id_for(pdf_bytes)}.layout.json"
            report_path.write_text(json.dumps(debug, indent=2, sort_keys=True))
        corpus, doc_id = ingest_document(
            pdf_bytes, corpus, args.corpus, gateway, params, config, origin=str(pdf_path)
        )
        print(f"{doc_id}\t{pdf_path}")
    _maybe_write_ledger(gateway, config)
    return 0


def cmd_ask(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    gateway = build_gateway(config)
    corpus = load_corpus(args.corpus)
    payload = run_query(args.query, args.grain, corpus, gateway, config)
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(payload["annotated_answer"] or "(no relevant context found)")
        refs = payload["references"]
        if refs["primary"] or refs["secondary"]:
            print("\nReferences:")
            for p in refs["primary"]:
                print(f"{p['number']}. {p['title']}")
            for s in refs["secondary"]:
                print(f"{s['number']}. {s['raw']}")
    _maybe_write_ledger(gateway, config)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    gateway = build_gateway(config)
    params = params_from_config(config)
    corpus = load_corpus(args.corpus)

    if args.generate:
        items = generate_dataset(corpus, gateway, params, target_count=args.generate)
        Path(args.dataset).write_text(json.dumps(dataset_to_json(items), indent=2))
        print(f"wrote {len(items)} items to {args.dataset}", file=sys.stderr)
        return 0

    items = load_dataset(args.dataset)
    for item in items:
        if not item.answer or not item.retrieved_contexts:
            _run_pipeline_for_item(item, corpus, gateway, config)
    scorable = [i for i in items if i.answer.strip() and i.retrieved_contexts]
    if len(scorable) < len(items):
        print(
            f"skipping {len(items) - len(scorable)} item(s) with no retrieved context or answer",
            file=sys.stderr,
        )
    items = scorable
    report = evaluate_run(
        items,
        gateway,
        params,
        pseudo_question_count=config.pseudo_question_count,
        f1_weight=config.correctness_f1_weight,
        similarity_weight=config.correctness_similarity_weight,
        components=config.ragas_components,
        prices=PriceSheet(config.input_price_per_1m, config.output_price_per_1m),
    )
    if args.json:
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    else:
        print(report.to_text_table(name=Path(args.corpus).stem))
    _maybe_write_ledger(gateway, config)
    return 0


def _run_pipeline_for_item(item: EvalItem, corpus, gateway, config: Config) -> None:
    params = params_from_config(config)
    contexts = retrieve(item.question, corpus, gateway, params, parallelism=config.parallelism)
    result = synthesize(item.question, contexts, gateway, params, config.budget)
    item.retrieved_contexts = [c.paragraph.text for c in contexts]
    item.answer = result.answer_text


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import make_app

    config = _load_config(args.config)
    app = make_app(args.corpus, config)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_usage(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    ledger = UsageLedger.from_jsonl(Path(args.ledger).read_text())
    report = cost_report(ledger, PriceSheet(config.input_price_per_1m, config.output_price_per_1m))
    by_stage: dict[str, tuple[int, int, int]] = {}
    for record in ledger.records:
        calls, ins, outs = by_stage.get(record.stage, (0, 0, 0))
        by_stage[record.stage] = (calls + 1, ins + record.input_tokens, outs + record.output_tokens)
    for stage in sorted(by_stage):
        calls, ins, outs = by_stage[stage]
        print(f"{stage:12s} calls={calls:6d} input={ins:10d} output={outs:10d}")
    print(f"{'total':12s} calls={len(ledger.records):6d} input={report.total_input_tokens:10d} "
          f"output={report.total_output_tokens:10d} cost=${report.cost:.4f}")
    return 0


def _maybe_write_ledger(gateway, config: Config) -> None:
    if config.ledger_path:
        Path(config.ledger_path).write_text(gateway.ledger.to_jsonl() + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citeweave",
        description="Citation-aware retrieval-augmented writing assistant.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="extract and summarize PDFs into a corpus")
    p_ingest.add_argument("--corpus", required=True)
    p_ingest.add_argument("--config")
    p_ingest.add_argument("--layout-report", metavar="DIR", help="write per-document layout debug JSON")
    p_ingest.add_argument("pdfs", nargs="+", metavar="pdf")
    p_ingest.set_defaults(func=cmd_ingest)

    p_ask = sub.add_parser("ask", help="answer a query with referenced synthesis")
    p_ask.add_argument("--corpus", required=True)
    p_ask.add_argument("--grain", choices=("coarse", "fine"), default="fine")
    p_ask.add_argument("--json", action="store_true")
    p_ask.add_argument("--config")
    p_ask.add_argument("query")
    p_ask.set_defaults(func=cmd_ask)

    p_eval = sub.add_parser("eval", help="score a run or generate an eval dataset")
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument("--generate", type=int, metavar="N")
    p_eval.add_argument("--json", action="store_true")
    p_eval.add_argument("--config")
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--corpus", required=True)
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--config")
    p_serve.set_defaults(func=cmd_serve)

    p_usage = sub.add_parser("usage", help="summarize a usage ledger")
    p_usage.add_argument("--ledger", required=True)
    p_usage.add_argument("--config")
    p_usage.set_defaults(func=cmd_usage)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CiteweaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
