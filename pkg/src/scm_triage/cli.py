"""Command-line entry points: batch triage, evaluation reports, synthetic
corpus generation, the HTTP service, and demo seeding."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import date
from pathlib import Path
from typing import Optional

from scm_triage.backends import make_backend
from scm_triage.cases import IngestFatalError, ingest_cases, write_cases_jsonl
from scm_triage.config import AppConfig, load_config
from scm_triage.feedback import FeedbackDecision
from scm_triage.fixtures import seed_demo
from scm_triage.generator import generate_cases
from scm_triage.metrics import LabeledRecord, NoEvaluableCasesError, build_report, collapse
from scm_triage.pipeline import PromptLibrary
from scm_triage.rubric import Classification, rubric_oracle
from scm_triage.store import TriageStore, category_histogram, run_batch

logger = logging.getLogger(__name__)


class CliError(RuntimeError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triage",
        description="Surgical co-management triage: run batches, report metrics, "
        "generate synthetic corpora, and serve the review API.",
    )
    parser.add_argument("--config", help="path to a JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="triage a batch of scheduled cases")
    p_run.add_argument("--input", required=True, help="case file (.json/.jsonl) or directory")
    p_run.add_argument("--date", help="surgery date YYYY-MM-DD (default: the input's unique date)")
    p_run.add_argument("--backend", choices=("stub", "http"), default="stub")
    p_run.add_argument("--log-dir", help="store directory (default from config)")
    p_run.add_argument("--workers", type=int, default=1)

    p_report = sub.add_parser("report", help="evaluation metrics over adjudicated cases")
    p_report.add_argument("--window", default="all", help="'all' or START:END surgery-date range")
    p_report.add_argument("--replicates", type=int, default=None)
    p_report.add_argument("--seed", type=int, default=None)
    p_report.add_argument("--log-dir", help="store directory (default from config)")
    p_report.add_argument(
        "--labels",
        help="labeled CSV (case_id,reference[,predicted]); predictions come from "
        "the store when the column is absent",
    )
    p_report.add_argument("--json", action="store_true", help="emit the report as JSON")

    p_gen = sub.add_parser("generate", help="write a synthetic labeled case corpus")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True, help="output JSONL path")
    p_gen.add_argument("--labels-out", help="optional gold-label CSV path")
    p_gen.add_argument("--mix", help="JSON object of archetype weights")
    p_gen.add_argument("--surgery-date", help="YYYY-MM-DD for every generated case")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--log-dir")
    p_serve.add_argument("--static-dir", help="directory of built UI assets to serve at /")

    p_demo = sub.add_parser("seed-demo", help="populate a store with the reference demo dataset")
    p_demo.add_argument("--log-dir", required=True)
    p_demo.add_argument("--seed", type=int, default=11)

    return parser


def _parse_date(raw: str, flag: str) -> date:
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise CliError(f"{flag} must be YYYY-MM-DD, got {raw!r}") from None


def _resolve_log_dir(args, config: AppConfig) -> str:
    return getattr(args, "log_dir", None) or config.log_dir


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _infer_batch_date(source: str) -> date:
    result = ingest_cases(source)
    dates = sorted({case.surgery_date for case, _ in result.cases})
    if not dates:
        raise CliError(f"no well-formed cases found in {source}")
    if len(dates) > 1:
        raise CliError(
            "input contains multiple surgery dates "
            f"({', '.join(d.isoformat() for d in dates)}); pass --date"
        )
    return dates[0]


def _cmd_run(args, config: AppConfig) -> int:
    batch_date = _parse_date(args.date, "--date") if args.date else _infer_batch_date(args.input)
    prompts = PromptLibrary.load()
    backend = make_backend(args.backend, config.backend, prompts)
    store = TriageStore(_resolve_log_dir(args, config))
    summary = run_batch(
        store, batch_date, args.input, backend, prompts, workers=max(1, args.workers)
    )
    tiers = " ".join(f"{k}={v}" for k, v in summary.tier_counts.items()) or "none"
    print(
        f"triaged {summary.triaged} cases for {summary.batch_date.isoformat()}: {tiers} "
        f"(skipped other dates: {summary.skipped_other_dates}, errors: {len(summary.errors)})"
    )
    for err in summary.errors:
        print(f"  error: {err}", file=sys.stderr)
    # Per-case failures are reported but do not fail the batch.
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

_REFERENCE_VALUES = {
    "yes": FeedbackDecision.YES,
    "no": FeedbackDecision.NO,
}


def _reference_from_text(raw: str) -> FeedbackDecision:
    token = raw.strip().lower()
    if token in _REFERENCE_VALUES:
        return _REFERENCE_VALUES[token]
    for tier in Classification:
        if token == tier.value.lower():
            return FeedbackDecision.YES if collapse(tier) else FeedbackDecision.NO
    raise CliError(f"unrecognized reference label {raw!r} (want Yes/No or a tier)")


def _tier_from_text(raw: str) -> Classification:
    token = raw.strip().lower()
    for tier in Classification:
        if token == tier.value.lower():
            return tier
    raise CliError(f"unrecognized tier {raw!r}")


def _records_from_labels(path: str, store: Optional[TriageStore]):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise CliError(f"labels file {path} is empty")
            fields = {name.strip().lower() for name in reader.fieldnames}
            if "case_id" not in fields or "reference" not in fields:
                raise CliError("labels file needs case_id and reference columns")
            rows = [{k.strip().lower(): v for k, v in row.items()} for row in reader]
    except OSError as exc:
        raise CliError(f"cannot read labels file: {exc}") from exc

    has_predicted = all(row.get("predicted") for row in rows) and bool(rows)
    records = []
    missing = []
    for row in rows:
        case_id = (row.get("case_id") or "").strip()
        if not case_id:
            raise CliError("labels file has a row without case_id")
        reference = _reference_from_text(row["reference"])
        if has_predicted:
            predicted = _tier_from_text(row["predicted"])
        else:
            if store is None:
                raise CliError("labels file lacks a predicted column and no store is available")
            try:
                stored, _ = store.case_detail(case_id)
            except Exception:
                missing.append(case_id)
                continue
            predicted = stored.result.classification
        records.append(LabeledRecord(case_id=case_id, predicted=predicted, reference=reference))
    if missing:
        print(
            f"warning: {len(missing)} labeled cases missing from the store were excluded "
            f"(first: {missing[0]})",
            file=sys.stderr,
        )
    return records


def _cmd_report(args, config: AppConfig) -> int:
    replicates = args.replicates if args.replicates is not None else config.report.replicates
    seed = args.seed if args.seed is not None else config.report.seed

    histogram: Optional[dict] = None
    if args.labels:
        store = None
        log_dir = getattr(args, "log_dir", None) or config.log_dir
        if Path(log_dir).exists():
            store = TriageStore(log_dir)
        records = _records_from_labels(args.labels, store)
        predictions = [r.predicted for r in records]
    else:
        store = TriageStore(_resolve_log_dir(args, config))
        try:
            predictions, records, effective = store.evaluation_snapshot(args.window)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        histogram = category_histogram(effective)

    try:
        report = build_report(predictions, records, replicates=replicates, seed=seed)
    except NoEvaluableCasesError:
        print("no evaluable cases: nothing has both a triage record and feedback")
        return 1

    if args.json:
        payload = report.to_json_dict()
        payload["window"] = args.window if not args.labels else None
        payload["category_histogram"] = histogram
        print(json.dumps(payload, indent=2))
        return 0

    print(report.render_text())
    if histogram is not None:
        print("Discordance categories (coded No-reasons):")
        if histogram:
            for category, count in histogram.items():
                print(f"  {category:<30} {count}")
        else:
            print("  (none recorded)")
    return 0


# ---------------------------------------------------------------------------
# generate / serve / seed-demo
# ---------------------------------------------------------------------------

def _cmd_generate(args, config: AppConfig) -> int:
    mix = None
    if args.mix:
        try:
            mix = json.loads(args.mix)
        except json.JSONDecodeError as exc:
            raise CliError(f"--mix must be a JSON object: {exc}") from exc
        if not isinstance(mix, dict):
            raise CliError("--mix must be a JSON object of archetype weights")
    kwargs = {}
    if args.surgery_date:
        kwargs["surgery_date"] = _parse_date(args.surgery_date, "--surgery-date")
    try:
        generated = generate_cases(args.n, args.seed, mix=mix, **kwargs)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    write_cases_jsonl(args.out, [(g.case, g.bundle) for g in generated])
    if args.labels_out:
        path = Path(args.labels_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["case_id", "reference"])
            for g in generated:
                writer.writerow([g.case.case_id, rubric_oracle(g.profile).value])
    print(f"wrote {len(generated)} cases to {args.out}")
    return 0


def _cmd_serve(args, config: AppConfig) -> int:
    import uvicorn

    from scm_triage.service import create_app

    host = args.host or config.service.host
    port = args.port if args.port is not None else config.service.port
    static_dir = args.static_dir or config.service.static_dir
    if static_dir and not Path(static_dir).is_dir():
        raise CliError(f"static dir does not exist: {static_dir}")
    store = TriageStore(_resolve_log_dir(args, config))
    app = create_app(store, report_defaults=config.report, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def _cmd_demo(args, config: AppConfig) -> int:
    store = seed_demo(args.log_dir, seed=args.seed)
    predictions, labeled, _ = store.evaluation_snapshot("all")
    print(
        f"seeded demo store at {args.log_dir}: {len(predictions)} triaged cases, "
        f"{len(labeled)} with feedback"
    )
    return 0


_HANDLERS = {
    "run": _cmd_run,
    "report": _cmd_report,
    "generate": _cmd_generate,
    "serve": _cmd_serve,
    "seed-demo": _cmd_demo,
}


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        return _HANDLERS[args.command](args, config)
    except (CliError, IngestFatalError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
