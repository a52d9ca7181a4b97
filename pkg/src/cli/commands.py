"""Subcommand implementations. Each returns its artifact and records a manifest stage."""

import json
import logging
import sys
from pathlib import Path

import yaml

from baseline.nearest import load_baseline, save_baseline, train_baseline
from cli.config import ConfigError, load_api_key
from constants.config import FINGERPRINT_ALGORITHM, PAY_RATE_SWEEP
from corpus.stats import corpus_stats
from corpus.text import label_corpus
from corpus.units import Label, LangPair, make_buckets
from finetune.backends import RemoteModel, classify_batch
from finetune.client import FineTuneClient, FineTuneJob, JobStatus, events_to_csv
from finetune.encoding import Dialect, PromptEncoding, prepare_training_file
from finetune.mock import MockTransport
from finetune.transport import HttpTransport
from ingest.jsonl import corpus_fingerprint, parse_jsonl, write_jsonl
from ingest.report import CorpusFile, CorpusFormat, IngestError, IngestReport
from ingest.validate import filter_valid, parse_corpus
from metrics.analysis import (
    LearningCurvePoint,
    compare_models,
    language_pair_profile,
    learning_curve,
    loss_convergence_step,
)
from metrics.confusion import (
    ConfusionMatrix,
    Prediction,
    SavingsParams,
    confusion_from,
    metrics_report,
    savings_report,
)
from project.report import (
    ReportFormat,
    render_comparison,
    render_curve,
    render_profiles,
    render_report,
    render_savings,
    to_csv,
)
from project.store import Project, ProjectError, StageError, init_project, read_artifact, write_atomic
from splitter.split import load_split, save_split, stratified_split, verify_distribution
from splitter.subsample import SubsamplePlan, subsample_train

CORPUS_FILE = "corpus/corpus.jsonl"
SPLIT_FILE = "splits/split.json"
BASELINE_FILE = "jobs/baseline.jsonl"
PREDICTIONS_FILE = "predictions/predictions.jsonl"
LAI_FILE = "predictions/lai.csv"
SUFFIX_FORMATS = {".tsv": "tsv", ".jsonl": "jsonl", ".tmx": "tmx"}


def _emit(text):
    sys.stdout.write(text)


def _begin(config, stage, *requires):
    """Load the project manifest, checking the stage is new and its prerequisites exist."""
    project = Project(config.project)
    manifest = project.load_manifest()
    if manifest.has(stage):
        raise StageError(f"stage '{stage}' is already recorded in run {manifest.run_id}")
    for required in requires:
        manifest.stage(required)
    return project, manifest


def _named(text, what):
    """Split 'NAME=VALUE'."""
    name, sep, value = text.partition("=")
    if not sep or not name.strip() or not value.strip():
        raise ConfigError(f"{what} must look like NAME=VALUE, got '{text}'")
    return name.strip(), value.strip()


def _load_segments(project, manifest, buckets):
    """Labeled segments of the ingested corpus, checked against the recorded fingerprint."""
    ingest = manifest.stage("ingest")
    corpus_file = CorpusFile(project.path / CORPUS_FILE, CorpusFormat.JSONL, LangPair.parse(ingest["lang_pair"]))
    units, _ = parse_jsonl(corpus_file)
    if corpus_fingerprint(units) != ingest["corpus_fingerprint"]:
        raise ProjectError(f"{CORPUS_FILE} changed since it was ingested")
    return label_corpus(units, buckets)


def _split_segments(project, manifest):
    """(split, train segments, test segments) in split id order."""
    split = load_split(project.path / SPLIT_FILE)
    by_id = {segment.id: segment for segment in _load_segments(project, manifest, split.buckets)}
    unknown = [i for i in split.train_ids + split.test_ids if i not in by_id]
    if unknown:
        raise ProjectError(f"{SPLIT_FILE} names {len(unknown)} ids missing from the corpus, e.g. {unknown[0]}")
    return split, [by_id[i] for i in split.train_ids], [by_id[i] for i in split.test_ids]


def _client(config, args):
    if config.mock_scenario:
        try:
            transport = MockTransport.from_file(config.mock_scenario)
        except (OSError, ValueError) as e:
            raise ConfigError(f"unable to load mock scenario {config.mock_scenario}: {e}") from e
    else:
        api_key = load_api_key(getattr(args, "api_key_file", None))
        if not api_key:
            raise ConfigError("no API key configured")
        transport = HttpTransport(config.api_base, api_key)
    return FineTuneClient(transport, seed=config.seed)


def cmd_init(args, config):
    project = init_project(config.project, getattr(args, "run_id", None), config.to_dict())
    print(f"initialized {project.path} (run {project.run_id})")
    return project


def cmd_ingest(args, config):
    """Parse, validate and store the corpus as canonical JSONL."""
    project, manifest = _begin(config, "ingest", "init")
    input_format = args.input_format or SUFFIX_FORMATS.get(Path(args.input).suffix.lower())
    if input_format is None:
        raise ConfigError(f"cannot infer the corpus format of {args.input}, use --input-format")
    corpus_format = CorpusFormat(input_format)
    lang_pair = LangPair.parse(args.lang_pair)
    corpus_file = CorpusFile(Path(args.input), corpus_format, lang_pair, args.declared_count)
    pe_file = CorpusFile(Path(args.pe_file), corpus_format, lang_pair) if args.pe_file else None

    units, parse_report = parse_corpus(corpus_file, pe_file)
    kept, validation_report = filter_valid(units)
    if not kept:
        raise IngestError(f"no valid units in {args.input}")
    write_jsonl(kept, project.path / CORPUS_FILE)
    buckets = make_buckets(config.buckets)
    stats = corpus_stats(label_corpus(kept, buckets), buckets)

    report = IngestReport(
        accepted=len(kept),
        rejected=parse_report.rejected + validation_report.rejected,
        rejection_reasons=parse_report.rejection_reasons + validation_report.rejection_reasons,
    )
    project.record(
        "ingest",
        {
            "input": str(args.input),
            "pe_file": args.pe_file,
            "format": corpus_format.value,
            "lang_pair": str(lang_pair),
            "declared_count": args.declared_count,
            "corpus_path": CORPUS_FILE,
            "corpus_fingerprint": corpus_fingerprint(kept),
            "fingerprint_algorithm": FINGERPRINT_ALGORITHM,
            "report": report.to_dict(),
            "stats": {
                "units": stats.n_units,
                "edit": stats.edit_count,
                "keep": stats.keep_count,
                "mean_source_length": stats.mean_source_length,
                "buckets": {str(bucket): count for bucket, count in stats.per_bucket_counts},
            },
            "config": config.to_dict(),
        },
    )
    print(
        f"ingested {report.accepted} units ({report.rejected} rejected): "
        f"{stats.edit_count} edit, {stats.keep_count} keep"
    )
    for locator, reason in report.rejection_reasons:
        print(f"  rejected {locator}: {reason}")
    return report


def cmd_split(args, config):
    project, manifest = _begin(config, "split", "ingest")
    buckets = make_buckets(config.buckets)
    segments = _load_segments(project, manifest, buckets)
    split = stratified_split(segments, config.ratio, config.seed, buckets)
    rows = verify_distribution(split, segments, buckets)
    save_split(split, project.path / SPLIT_FILE)
    project.record(
        "split",
        {
            "path": SPLIT_FILE,
            "ratio": split.ratio,
            "seed": split.seed,
            "train": len(split.train_ids),
            "test": len(split.test_ids),
            "flagged_buckets": [str(row.bucket) for row in rows if row.flagged],
            "config": config.to_dict(),
        },
    )
    print(f"split {len(split.train_ids)} train / {len(split.test_ids)} test (seed {split.seed})")
    for row in rows:
        flag = "  FLAGGED" if row.flagged else ""
        print(f"  {str(row.bucket):>6}: train {row.train_count}, test {row.test_count}{flag}")
    return split


def cmd_prepare(args, config):
    project, manifest = _begin(config, "prepare", "split")
    _, train, _ = _split_segments(project, manifest)
    encoding = PromptEncoding(Dialect(config.dialect))
    training_file = prepare_training_file(train, encoding)
    relative = f"jobs/train_{encoding.dialect.value}.jsonl"
    write_atomic(project.path / relative, training_file.document)
    project.record(
        "prepare",
        {
            "path": relative,
            "dialect": encoding.dialect.value,
            "records": training_file.record_count,
            "rejected": [list(item) for item in training_file.rejected],
            "config": config.to_dict(),
        },
    )
    print(f"prepared {training_file.record_count} records in {relative}")
    return project.path / relative


def _hyperparams(items):
    params = {}
    for item in items or []:
        name, value = _named(item, "--hyperparam")
        params[name] = yaml.safe_load(value)
    return params


def cmd_finetune(args, config):
    return {"start": _finetune_start, "status": _finetune_status, "events": _finetune_events}[args.action](
        args, config
    )


def _finetune_start(args, config):
    project, manifest = _begin(config, "finetune_start", "prepare")
    prepared = manifest.stage("prepare")
    document = read_artifact(project.path / prepared["path"])
    client = _client(config, args)
    file_id = client.upload_file(document, Path(prepared["path"]).name)
    job = client.create_job(file_id, config.model, _hyperparams(args.hyperparam))
    project.record("finetune_start", {"file_id": file_id, "job": job.to_dict(), "config": config.to_dict()})
    print(f"started job {job.job_id} on {job.base_model}: {job.status.value}")
    return job


def _finetune_status(args, config):
    """Poll the job. Only a terminal status is recorded; a timeout can be resumed later."""
    project, manifest = _begin(config, "finetune_result", "finetune_start")
    job_id = manifest.stage("finetune_start")["job"]["job_id"]
    outcome = _client(config, args).poll_job(job_id, config.poll_interval, config.poll_timeout)
    if outcome.timed_out:
        status = outcome.job.status.value if outcome.job else "unknown"
        print(f"job {job_id} still {status} after {outcome.polls} polls")
        return outcome.job
    project.record(
        "finetune_result",
        {
            "job": outcome.job.to_dict(),
            "polls": outcome.polls,
            "transport_errors": outcome.transport_errors,
            "config": config.to_dict(),
        },
    )
    print(f"job {job_id} {outcome.job.status.value}: {outcome.job.fine_tuned_model or '-'}")
    return outcome.job


def _finetune_events(args, config):
    project, manifest = _begin(config, "finetune_events", "finetune_start")
    job_id = manifest.stage("finetune_start")["job"]["job_id"]
    events = _client(config, args).fetch_events(job_id)
    relative = f"jobs/{job_id}_loss.csv"
    write_atomic(project.path / relative, events_to_csv(events))
    converged_at = loss_convergence_step(events)
    project.record(
        "finetune_events",
        {
            "job_id": job_id,
            "events": [event.to_dict() for event in events],
            "loss_csv": relative,
            "convergence_step": converged_at,
            "config": config.to_dict(),
        },
    )
    print(f"{len(events)} training events written to {relative}, converged at step {converged_at}")
    return events


def _backend(args, project, manifest, config, train):
    if config.backend == "baseline":
        if getattr(args, "baseline_file", None):
            model = load_baseline(args.baseline_file)
            logging.info(f"Replaying baseline {args.baseline_file} ({len(model.exemplars)} exemplars)")
        else:
            model = train_baseline(train)
        save_baseline(model, project.path / BASELINE_FILE)
        return model
    job = FineTuneJob.from_dict(manifest.stage("finetune_result")["job"])
    if job.status != JobStatus.SUCCEEDED:
        raise ProjectError(f"fine-tuning job {job.job_id} ended {job.status.value}, no model to query")
    encoding = PromptEncoding(Dialect(config.dialect))
    return RemoteModel(_client(config, args), job.fine_tuned_model, encoding, job.base_model)


def cmd_predict(args, config):
    project, manifest = _begin(config, "predict", "split")
    _, train, test = _split_segments(project, manifest)
    backend = _backend(args, project, manifest, config, train)
    predictions = classify_batch(backend, test, config.concurrency)
    lines = "".join(json.dumps(p.to_dict(), ensure_ascii=False) + "\n" for p in predictions)
    write_atomic(project.path / PREDICTIONS_FILE, lines)
    abstained = sum(1 for p in predictions if p.abstained)
    project.record(
        "predict",
        {
            "path": PREDICTIONS_FILE,
            "backend": backend.describe(),
            "count": len(predictions),
            "abstained": abstained,
            "config": config.to_dict(),
        },
    )
    print(f"{len(predictions)} predictions ({abstained} abstained) written to {PREDICTIONS_FILE}")
    return project.path / PREDICTIONS_FILE


def _load_predictions(path):
    return read_artifact(
        path, lambda text: [Prediction.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
    )


def cmd_eval(args, config):
    """Metrics for the stored predictions, or for literal counts with --matrix."""
    params = SavingsParams(config.pay_rate)
    fmt = ReportFormat(config.format)
    if args.matrix:
        report = metrics_report(ConfusionMatrix.parse(args.matrix), params)
        _emit(render_report(report, fmt))
        return report

    project, manifest = _begin(config, "eval", "predict")
    predictions = _load_predictions(project.path / manifest.stage("predict")["path"])
    report = metrics_report(confusion_from(predictions), params)
    written = []
    for report_format in ReportFormat:
        relative = f"reports/{manifest.run_id}.{report_format.extension}"
        write_atomic(project.path / relative, render_report(report, report_format))
        written.append(relative)
    if args.export_lai:
        rows = [[p.unit_id, str(p.predicted == Label.KEEP).lower()] for p in predictions]
        write_atomic(project.path / LAI_FILE, to_csv(["unit_id", "lai"], rows))
    project.record(
        "eval",
        {
            "metrics": report.to_dict(),
            "reports": written,
            "lai_export": LAI_FILE if args.export_lai else None,
            "config": config.to_dict(),
        },
    )
    _emit(render_report(report, fmt))
    return report


def cmd_savings(args, config):
    params = SavingsParams(config.pay_rate)
    sweep = PAY_RATE_SWEEP if args.sweep else ()
    if args.matrix:
        report = savings_report(ConfusionMatrix.parse(args.matrix), params, sweep)
    else:
        project, manifest = _begin(config, "savings", "eval")
        matrix = ConfusionMatrix.from_dict(manifest.stage("eval")["metrics"]["matrix"])
        report = savings_report(matrix, params, sweep)
        project.record("savings", {"savings": report.to_dict(), "config": config.to_dict()})
    _emit(render_savings(report, ReportFormat(config.format)))
    return report


def _run_matrix(value):
    """Literal 'tp,fp,tn,fn' or '@PROJECT_DIR' naming a project with an eval stage."""
    if value.startswith("@"):
        manifest = Project(value[1:]).load_manifest()
        return ConfusionMatrix.from_dict(manifest.stage("eval")["metrics"]["matrix"])
    return ConfusionMatrix.parse(value)


def cmd_compare(args, config):
    runs = [(name, _run_matrix(value)) for name, value in (_named(item, "--run") for item in args.run)]
    rows = compare_models(runs)
    _emit(render_comparison(rows, ReportFormat(config.format)))
    return rows


def _computed_curve(sizes, config):
    """Baselines on nested stratified subsamples, all scored on the shared test set."""
    project, manifest = _begin(config, "curve", "split")
    split, train, test = _split_segments(project, manifest)
    plan = SubsamplePlan(tuple(sizes), config.seed)
    by_id = {segment.id: segment for segment in train}
    points = []
    for size, ids in subsample_train(split, plan, train):
        model = train_baseline([by_id[i] for i in ids])
        matrix = confusion_from(classify_batch(model, test, config.concurrency))
        points.append(LearningCurvePoint.from_matrix(size, matrix))
        logging.info(f"Training size {size}: fn rate {points[-1].fn_rate:.2%}")
    return project, points


def cmd_curve(args, config):
    project = None
    if args.point:
        points = []
        for item in args.point:
            size, counts = _named(item, "--point")
            try:
                size = int(size)
            except ValueError:
                raise ConfigError(f"--point size must be an integer, got '{size}'")
            points.append(LearningCurvePoint.from_matrix(size, ConfusionMatrix.parse(counts)))
    elif args.sizes:
        try:
            sizes = [int(size) for size in args.sizes.split(",")]
        except ValueError:
            raise ConfigError(f"--sizes must be comma separated integers, got '{args.sizes}'")
        project, points = _computed_curve(sizes, config)
    else:
        raise ConfigError("curve needs --point or --sizes")
    ordered, trend = learning_curve(points)
    if project is not None:
        project.record(
            "curve",
            {
                "points": [{"train_size": p.train_size, "matrix": p.matrix.to_dict(), "fn_rate": p.fn_rate} for p in ordered],
                "trend": trend.value,
                "config": config.to_dict(),
            },
        )
    _emit(render_curve(ordered, trend, ReportFormat(config.format)))
    return ordered, trend


def cmd_profile(args, config):
    matrices = {}
    for item in args.pair:
        pair, counts = _named(item, "--pair")
        matrices[pair] = ConfusionMatrix.parse(counts)
    profiles = language_pair_profile(matrices, config.margin)
    _emit(render_profiles(matrices, profiles, ReportFormat(config.format)))
    return profiles
