"""Command-line entry point wiring the library into end-to-end workflows.

Subcommands: gen-corpus, train-docs, classify, detect, draft, eval-docs,
eval-attacks. Exit codes: 0 success, 1 runtime failure (diagnostic on
stderr), 2 usage error. Option precedence is flags > --config file >
built-in defaults, and every run echoes its effective configuration (with a
content hash) to stderr before doing anything else.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shutil
import sys
from datetime import date
from pathlib import Path

from .attacks import load_bank
from .corpus import (
    CorpusConfig,
    generate_corpus,
    load_document,
    load_document_dir,
    load_manifest,
)
from .drafting import (
    BeneficiaryStore,
    draft_response,
    load_field_patterns,
    load_template_library,
)
from .ensemble import EnsembleDocumentClassifier
from .evaluation import evaluate_attacks, evaluate_documents
from .ioutil import atomic_write_text
from .text import load_stopwords


class UsageError(Exception):
    """Bad invocation detected after argparse (e.g. config file contents)."""


def _tau_value(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid tau {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"tau must be in [0, 1], got {text}")
    return value


def _date_value(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid date {text!r} (want YYYY-MM-DD)"
        ) from None


def _ngrams_value(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid n-gram list {text!r}") from None
    if not values or any(n < 1 for n in values):
        raise argparse.ArgumentTypeError("n-gram sizes must be >= 1")
    return values


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        payload = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(payload, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return payload


def _resolve(args, file_config: dict, defaults: dict) -> dict:
    """flags > config file > defaults, keyed by the defaults dict."""
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_config:
            resolved[key] = file_config[key]
        else:
            resolved[key] = default
    return resolved


def _echo_config(command: str, resolved: dict) -> None:
    payload = json.dumps(resolved, sort_keys=True, default=str)
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    print(f"[rfekit] {command} config sha256={digest[:16]} {payload}", file=sys.stderr)


def _emit_records(records, out_path) -> None:
    text = "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in records)
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        atomic_write_text(out_path, text)


# --- subcommand handlers -----------------------------------------------------

def _cmd_gen_corpus(args) -> int:
    file_config = _load_config_file(args.config)
    defaults = CorpusConfig().as_dict()
    merged = _resolve(args, file_config, defaults)
    _echo_config("gen-corpus", merged)
    try:
        config = CorpusConfig.from_dict(merged)
        config.validate()
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"invalid corpus configuration: {exc}") from None
    manifest = generate_corpus(config, args.out)
    print(
        f"wrote {len(manifest['documents'])} documents and "
        f"{len(manifest['rfes'])} RFEs to {args.out}"
    )
    return 0


def _cmd_train_docs(args) -> int:
    file_config = _load_config_file(args.config)
    defaults = {
        "channel": "ocr",
        "split": "train",
        "ngrams": (2, 3),
        "l2": 1e-3,
        "learning_rate": 0.5,
        "max_iters": 2000,
        "grad_tol": 1e-6,
    }
    opts = _resolve(args, file_config, defaults)
    _echo_config("train-docs", opts)
    manifest = load_manifest(args.corpus)
    doc_records = [
        rec
        for rec in manifest["documents"]
        if opts["split"] == "all" or rec["split"] == opts["split"]
    ]
    if not doc_records:
        raise UsageError(f"no documents with split {opts['split']!r} in {args.corpus}")
    docs = [load_document(args.corpus, rec, opts["channel"]) for rec in doc_records]
    labels = [rec["label"] for rec in doc_records]
    model = EnsembleDocumentClassifier(
        n_range=tuple(opts["ngrams"]),
        l2=float(opts["l2"]),
        learning_rate=float(opts["learning_rate"]),
        max_iters=int(opts["max_iters"]),
        grad_tol=float(opts["grad_tol"]),
    ).fit(docs, labels)
    model.save(args.out)
    print(
        f"trained on {len(docs)} documents "
        f"({len(model.classes_)} classes, vocabulary {model.vocabulary_.size}); "
        f"bundle written to {args.out}"
    )
    return 0


def _find_doc_dirs(input_dir: Path) -> list[Path]:
    hits = sorted(
        {p.parent for p in input_dir.glob("*/doc.json")}
        | {p.parent for p in input_dir.glob("*/*/doc.json")}
    )
    if (input_dir / "doc.json").exists():
        hits.insert(0, input_dir)
    return hits


def _cmd_classify(args) -> int:
    opts = {"channel": args.channel or "ocr", "move": args.move, "out": args.out}
    _echo_config("classify", opts)
    model = EnsembleDocumentClassifier.load(args.bundle)
    input_dir = Path(args.input)

    jobs: list[tuple[str, Path]] = []
    if (input_dir / "manifest.json").exists():
        manifest = load_manifest(input_dir)
        jobs = [(rec["id"], input_dir / rec["dir"]) for rec in manifest["documents"]]
    else:
        jobs = [(d.name, d) for d in _find_doc_dirs(input_dir)]
    if not jobs:
        raise UsageError(f"no documents found under {args.input}")

    records = []
    moves: list[tuple[Path, Path]] = []
    for doc_id, doc_dir in jobs:
        trace = model.classify(load_document_dir(doc_dir, opts["channel"]))
        records.append({"id": doc_id, **trace.as_record()})
        if args.move:
            moves.append((doc_dir, Path(args.move) / trace.predicted / doc_dir.name))
    _emit_records(records, args.out)
    for src, target in moves:
        if src.resolve() == target.resolve():
            continue
        if target.exists():
            raise RuntimeError(f"move target already exists: {target}")
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.move(str(src), str(target))
    return 0


def _rfe_inputs(input_path: Path) -> list[tuple[str, Path]]:
    if input_path.is_file():
        return [(input_path.stem, input_path)]
    if (input_path / "manifest.json").exists():
        manifest = load_manifest(input_path)
        return [(rec["id"], input_path / rec["file"]) for rec in manifest["rfes"]]
    return [(p.stem, p) for p in sorted(input_path.glob("*.txt"))]


def _cmd_detect(args) -> int:
    file_config = _load_config_file(args.config)
    opts = _resolve(args, file_config, {"tau": 0.6})
    _echo_config("detect", opts)
    tau = opts["tau"]
    if not 0.0 <= float(tau) <= 1.0:
        raise UsageError(f"tau must be in [0, 1], got {tau}")
    bank = load_bank(args.bank)
    stopwords = load_stopwords()
    jobs = _rfe_inputs(Path(args.input))
    if not jobs:
        raise UsageError(f"no RFE text files under {args.input}")
    from .attacks import detect_attacks, similarity_matrix
    from .text import split_sentences

    records = []
    for rfe_id, path in jobs:
        sentences = split_sentences(path.read_text("utf-8"), stopwords)
        report = detect_attacks(
            similarity_matrix(sentences, bank), bank, float(tau)
        )
        records.append({"id": rfe_id, **report.as_record()})
    _emit_records(records, args.out)
    return 0


def _cmd_draft(args) -> int:
    file_config = _load_config_file(args.config)
    opts = _resolve(args, file_config, {"tau": 0.6, "today": None})
    _echo_config("draft", opts)
    tau = float(opts["tau"])
    if not 0.0 <= tau <= 1.0:
        raise UsageError(f"tau must be in [0, 1], got {tau}")
    today = opts["today"]
    if isinstance(today, str):
        today = date.fromisoformat(today)
    bank = load_bank(args.bank)
    store = BeneficiaryStore.load(args.store)
    library = load_template_library(args.templates)
    patterns = load_field_patterns(args.patterns) if args.patterns else None
    draft = draft_response(
        Path(args.input).read_text("utf-8"),
        bank,
        store,
        library,
        tau=tau,
        patterns=patterns,
        today=today,
    )
    atomic_write_text(args.out, draft.render())
    atomic_write_text(
        str(args.out) + ".manifest.json",
        json.dumps(draft.manifest.as_record(), sort_keys=True, indent=2) + "\n",
    )
    print(
        f"draft {draft.manifest.status}"
        + (
            f" (missing: {', '.join(draft.manifest.missing_fields)})"
            if draft.manifest.missing_fields
            else ""
        )
        + f"; wrote {args.out}"
    )
    return 0


def _cmd_eval_docs(args) -> int:
    opts = {"channel": args.channel or "ocr", "split": args.split or "test"}
    _echo_config("eval-docs", opts)
    model = EnsembleDocumentClassifier.load(args.bundle)
    manifest = load_manifest(args.corpus)
    doc_records = [
        rec
        for rec in manifest["documents"]
        if opts["split"] == "all" or rec["split"] == opts["split"]
    ]
    if not doc_records:
        raise UsageError(f"no documents with split {opts['split']!r}")
    docs = [load_document(args.corpus, rec, opts["channel"]) for rec in doc_records]
    labels = [rec["label"] for rec in doc_records]
    report = evaluate_documents(model, docs, labels, [r["id"] for r in doc_records])
    print(report.table())
    if args.json:
        _emit_records(report.as_records(), args.json)
    return 0


def _cmd_eval_attacks(args) -> int:
    file_config = _load_config_file(args.config)
    opts = _resolve(
        args, file_config, {"tau": 0.6, "attack": "specialty-occupation"}
    )
    _echo_config("eval-attacks", opts)
    tau = float(opts["tau"])
    if not 0.0 <= tau <= 1.0:
        raise UsageError(f"tau must be in [0, 1], got {tau}")
    corpus_dir = Path(args.corpus)
    manifest = load_manifest(corpus_dir)
    bank_path = args.bank or corpus_dir / manifest["paths"]["bank"]
    bank = load_bank(bank_path)
    pairs = [
        (
            (corpus_dir / rec["file"]).read_text("utf-8"),
            rec["attacks"],
        )
        for rec in manifest["rfes"]
    ]
    if not pairs:
        raise UsageError(f"corpus {args.corpus} has no RFEs")
    counts, scores = evaluate_attacks(bank, pairs, opts["attack"], tau)
    print(
        f"attack={opts['attack']} tau={tau}\n"
        f"tp={counts.tp} fp={counts.fp} fn={counts.fn} tn={counts.tn}\n"
        f"accuracy={scores.accuracy:.4f} precision={scores.precision:.4f} "
        f"recall={scores.recall:.4f} f1={scores.f1:.4f}"
    )
    if args.json:
        record = {
            "attack": opts["attack"],
            "tau": tau,
            "counts": {
                "tp": counts.tp,
                "fp": counts.fp,
                "fn": counts.fn,
                "tn": counts.tn,
            },
            "metrics": scores.as_record(),
        }
        _emit_records([record], args.json)
    return 0


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfekit",
        description="Document classification, RFE attack detection, and "
        "response drafting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a seeded synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--docs-per-class", dest="docs_per_class", type=int, default=None)
    p.add_argument("--rfes", dest="n_rfes", type=int, default=None)
    p.add_argument("--noise", dest="ocr_noise_rate", type=float, default=None)
    p.add_argument(
        "--train-fraction", dest="train_fraction", type=float, default=None
    )
    p.add_argument("--config", default=None, help="JSON config file")
    p.set_defaults(handler=_cmd_gen_corpus)

    p = sub.add_parser("train-docs", help="train the document ensemble")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="bundle output directory")
    p.add_argument("--channel", choices=("ocr", "clean"), default=None)
    p.add_argument("--split", choices=("train", "test", "all"), default=None)
    p.add_argument("--ngrams", type=_ngrams_value, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--grad-tol", dest="grad_tol", type=float, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=_cmd_train_docs)

    p = sub.add_parser("classify", help="classify documents with a trained bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True, help="corpus dir or directory of docs")
    p.add_argument("--channel", choices=("ocr", "clean"), default=None)
    p.add_argument("--out", default=None, help="JSONL output (default stdout)")
    p.add_argument(
        "--move",
        default=None,
        metavar="DEST",
        help="move each document directory into DEST/<predicted-class>/",
    )
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("detect", help="detect attack types in RFE text")
    p.add_argument("--bank", required=True)
    p.add_argument("--input", required=True, help="RFE .txt, directory, or corpus")
    p.add_argument("--tau", type=_tau_value, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=_cmd_detect)

    p = sub.add_parser("draft", help="assemble a response draft for one RFE")
    p.add_argument("--bank", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--templates", required=True)
    p.add_argument("--patterns", default=None)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=_tau_value, default=None)
    p.add_argument("--today", type=_date_value, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=_cmd_draft)

    p = sub.add_parser("eval-docs", help="per-class accuracy on a corpus")
    p.add_argument("--bundle", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default=None)
    p.add_argument("--channel", choices=("ocr", "clean"), default=None)
    p.add_argument("--json", default=None, help="write records to file ('-' stdout)")
    p.set_defaults(handler=_cmd_eval_docs)

    p = sub.add_parser("eval-attacks", help="confusion metrics for one attack")
    p.add_argument("--corpus", required=True)
    p.add_argument("--bank", default=None, help="bank override (default: corpus bank)")
    p.add_argument("--attack", default=None)
    p.add_argument("--tau", type=_tau_value, default=None)
    p.add_argument("--json", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=_cmd_eval_attacks)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
