"""Command-line entry point.

Subcommands: index, run, features, train, rerank-supervised, significance.
Configuration comes from a plain-text "key = value" file with CLI flag
overrides (flag > file > default). Every run writes a resolved-config
snapshot, a manifest of input checksums, and its outputs into the output
directory; re-running from the snapshot reproduces the run files byte for
byte.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, fields

from .analysis import AnalyzerConfig, analyze, load_stopwords
from .embeddings import (EmbeddingFormatError, EmbeddingTable, LookupPolicy,
                         load_embeddings)
from .evaluation import (METRICS, evaluate_systems, load_qrels, load_run,
                         paired_t_one_tailed, write_run, _metric_value)
from .features import (BASE_FEATURES, EMBEDDING_FEATURES, FeatureMatrix,
                       export_letor, extract_base_features,
                       extract_embedding_features, parse_letor,
                       standardize_per_query)
from .index import DataError, build_index, load_index, retrieve, save_index
from .pipeline import (PipelineSettings, UsageError, needs_embeddings,
                       rankings_for_run, run_pipeline)
from .ranker import load_ranker, save_ranker, score_with_ranker, train_linear
from .relevance import RmConfig
from .scorers import MmpConfig, SpanConfig


@dataclass
class RunConfig:
    corpus: str = ""
    queries: str = ""
    qrels: str = ""
    embeddings: str = ""
    embeddings_format: str = "word2vec_text"
    index_dir: str = ""
    output_dir: str = ""
    fields: str = ""          # comma-separated JSONL fields to concatenate
    pipeline: str = "lm"
    schema: str = "base"      # feature schema: base | embedding
    k: int = 400
    mu: float = 2000.0
    span_length: int = 20
    stride: int = 2
    mmp_weight: float = 0.7
    mmp_prefix: int = 20
    rm_fb_docs: int = 10
    rm_fb_terms: int = 50
    rm_lambda: float = 0.5
    rm_mu: float = 2000.0
    stem_fallback: bool = True
    analyzer_lowercase: bool = True
    analyzer_stem: bool = True
    analyzer_possessive: bool = True
    stopwords: str = ""       # optional stopword file path
    seed: int = 0
    restarts: int = 1
    threads: int = 1

    def analyzer(self) -> AnalyzerConfig:
        stopword_list = load_stopwords(self.stopwords or None)
        return AnalyzerConfig(
            lowercase=self.analyzer_lowercase,
            stopword_list=stopword_list,
            strip_possessive=self.analyzer_possessive,
            stem=self.analyzer_stem,
        )

    def settings(self) -> PipelineSettings:
        return PipelineSettings(
            k=self.k,
            mu=self.mu,
            span=SpanConfig(self.span_length, self.stride),
            mmp=MmpConfig(self.mmp_weight, self.mmp_prefix),
            rm=RmConfig(self.rm_fb_docs, self.rm_fb_terms, self.rm_lambda, self.rm_mu),
            policy=LookupPolicy(try_surface_then_stem=self.stem_fallback),
            threads=self.threads,
        )


_BOOL_TRUE = ("1", "true", "yes", "on")
_BOOL_FALSE = ("0", "false", "no", "off")


def _coerce(name: str, kind: type, raw: str):
    raw = raw.strip()
    if kind is bool:
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise UsageError(f"config key {name!r}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise UsageError(f"config key {name!r}: expected {kind.__name__}, got {raw!r}") from None


def load_config(path: str | None, overrides: dict) -> RunConfig:
    config = RunConfig()
    kinds = {f.name: type(getattr(config, f.name)) for f in fields(RunConfig)}
    if path:
        if not os.path.exists(path):
            raise DataError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                key = key.strip().replace(".", "_")
                if key not in kinds:
                    raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
                setattr(config, key, _coerce(key, kinds[key], value))
    for key, value in overrides.items():
        if value is None:
            continue
        setattr(config, key, _coerce(key, kinds[key], str(value)))
    return config


def write_resolved_config(config: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for f in sorted(fields(RunConfig), key=lambda f: f.name):
            fh.write(f"{f.name} = {getattr(config, f.name)}\n")


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(paths: dict[str, str], out_path: str) -> None:
    checksums = {}
    for label, path in sorted(paths.items()):
        if not path:
            continue
        if os.path.isdir(path):
            for name in sorted(os.listdir(path)):
                checksums[f"{label}/{name}"] = _sha256(os.path.join(path, name))
        elif os.path.exists(path):
            checksums[label] = _sha256(path)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(checksums, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_corpus(path: str, fields_spec: str = ""):
    """Yield (doc id, text) from JSONL (id + text or named fields) or TSV."""
    if not os.path.exists(path):
        raise DataError(f"corpus file not found: {path}")
    field_names = [f.strip() for f in fields_spec.split(",") if f.strip()]
    with open(path, encoding="utf-8") as fh:
        first = fh.read(1)
        fh.seek(0)
        if first == "{":
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
                if "id" not in record:
                    raise DataError(f"{path}:{lineno}: record missing 'id'")
                if field_names:
                    text = " ".join(str(record.get(f, "")) for f in field_names)
                elif "text" in record:
                    text = str(record["text"])
                else:
                    raise DataError(
                        f"{path}:{lineno}: record has no 'text'; set fields= to concatenate")
                yield str(record["id"]), text
        else:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t", 1)
                if len(parts) != 2:
                    raise DataError(f"{path}:{lineno}: expected 'id<TAB>text'")
                yield parts[0], parts[1]


def read_queries(path: str) -> list[tuple[str, str]]:
    if not os.path.exists(path):
        raise DataError(f"queries file not found: {path}")
    queries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'qid<TAB>text'")
            queries.append((parts[0], parts[1]))
    return queries


def _load_table(config: RunConfig) -> EmbeddingTable:
    if not config.embeddings:
        raise UsageError("this command needs embeddings= in the config or --embeddings")
    if not os.path.exists(config.embeddings):
        raise DataError(f"embeddings file not found: {config.embeddings}")
    return load_embeddings(config.embeddings, config.embeddings_format)


def _require_index(config: RunConfig):
    if not config.index_dir:
        raise UsageError("this command needs index_dir= in the config or --index-dir")
    if not os.path.isdir(config.index_dir):
        raise DataError(f"index directory not found: {config.index_dir}")
    return load_index(config.index_dir)


def cmd_index(config: RunConfig, force: bool = False) -> int:
    if not config.corpus:
        raise UsageError("index needs corpus= in the config or --corpus")
    if not config.index_dir:
        raise UsageError("index needs index_dir= in the config or --index-dir")
    if os.path.isdir(config.index_dir) and os.listdir(config.index_dir) and not force:
        raise UsageError(
            f"index directory {config.index_dir!r} is not empty; pass --force to overwrite")
    index = build_index(read_corpus(config.corpus, config.fields), config.analyzer())
    save_index(index, config.index_dir)
    print(f"indexed {index.doc_count} documents, "
          f"{len(index.postings)} terms, {index.collection_length} tokens")
    return 0


def _prepare_output_dir(config: RunConfig) -> str:
    if not config.output_dir:
        raise UsageError("this command needs output_dir= in the config or --output-dir")
    os.makedirs(config.output_dir, exist_ok=True)
    write_resolved_config(config, os.path.join(config.output_dir, "config.resolved"))
    write_manifest(
        {
            "corpus": config.corpus,
            "queries": config.queries,
            "qrels": config.qrels,
            "embeddings": config.embeddings,
            "index": config.index_dir,
        },
        os.path.join(config.output_dir, "manifest.json"),
    )
    return config.output_dir


def _write_metrics(out_dir: str, run_path: str, config: RunConfig, tag: str) -> None:
    if not config.qrels:
        return
    qrels = load_qrels(config.qrels)
    report = evaluate_systems({tag: load_run(run_path)}, qrels)
    with open(os.path.join(out_dir, "metrics.tsv"), "w", encoding="utf-8") as fh:
        fh.write(report.to_tsv())
    with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    for metric in METRICS:
        print(f"{metric}: {report.means[tag][metric]:.4f}")


def cmd_run(config: RunConfig) -> int:
    wants_table = needs_embeddings(config.pipeline)  # validates the name
    index = _require_index(config)
    queries = read_queries(config.queries) if config.queries else None
    if not queries:
        raise UsageError("run needs queries= in the config or --queries")
    table = _load_table(config) if wants_table else None
    out_dir = _prepare_output_dir(config)
    results = run_pipeline(queries, config.pipeline, index, table, config.settings())
    run_path = os.path.join(out_dir, "run.txt")
    write_run(run_path, rankings_for_run(results), config.pipeline)
    print(f"wrote {run_path}")
    _write_metrics(out_dir, run_path, config, config.pipeline)
    return 0


def _build_matrix(config: RunConfig) -> FeatureMatrix:
    index = _require_index(config)
    queries = read_queries(config.queries) if config.queries else None
    if not queries:
        raise UsageError("features needs queries= in the config or --queries")
    if not config.qrels:
        raise UsageError("features needs qrels= for labels")
    qrels = load_qrels(config.qrels)
    if config.schema == "base":
        schema, table = list(BASE_FEATURES), None
    elif config.schema == "embedding":
        schema = list(BASE_FEATURES) + list(EMBEDDING_FEATURES)
        table = _load_table(config)
    else:
        raise UsageError(f"unknown schema {config.schema!r}; valid: base, embedding")
    settings = config.settings()
    surface_analyzer = index.analyzer.surface_variant()
    matrix = FeatureMatrix(schema=schema)
    for qid, text in queries:
        analyzed = analyze(text, index.analyzer)
        candidates = retrieve(analyzed, index, settings.k, settings.mu, qid)
        surface_query = analyze(text, surface_analyzer)
        for entry in candidates.entries:
            values = extract_base_features(analyzed, entry.doc_id, index, settings.mu)
            if table is not None:
                answer = analyze(index.docs[entry.doc_id].raw_text, surface_analyzer)
                values.update(extract_embedding_features(
                    surface_query, answer, table, settings.span, settings.mmp,
                    settings.policy))
            label = qrels.get(qid, {}).get(entry.doc_id, 0)
            matrix.add(qid, entry.doc_id, label, values)
    matrix.sort()
    return standardize_per_query(matrix)


def cmd_features(config: RunConfig) -> int:
    out_dir = _prepare_output_dir(config)
    matrix = _build_matrix(config)
    letor_path = os.path.join(out_dir, f"features_{config.schema}.letor")
    export_letor(matrix, letor_path)
    print(f"wrote {letor_path} ({len(matrix.rows)} rows, {len(matrix.schema)} features)")
    return 0


def cmd_train(config: RunConfig, features_path: str, ranker_path: str) -> int:
    matrix = parse_letor(features_path)
    judgments = {}
    for row in matrix.rows:
        judgments.setdefault(row.query_id, {})[row.doc_id] = row.label
    ranker = train_linear(matrix, judgments, restarts=config.restarts, seed=config.seed)
    save_ranker(ranker, ranker_path)
    print(f"wrote {ranker_path} (training NDCG@20 {ranker.training_objective:.4f})")
    return 0


def cmd_rerank_supervised(config: RunConfig, features_path: str, ranker_path: str) -> int:
    out_dir = _prepare_output_dir(config)
    matrix = parse_letor(features_path)
    ranker = load_ranker(ranker_path)
    if ranker.schema_hash and ranker.schema_hash != matrix.schema_hash():
        raise DataError("ranker schema hash does not match the feature file schema")
    results = score_with_ranker(ranker, matrix)
    run_path = os.path.join(out_dir, "run.txt")
    write_run(run_path, rankings_for_run(results), "ltr")
    print(f"wrote {run_path}")
    _write_metrics(out_dir, run_path, config, "ltr")
    return 0


def cmd_significance(run_a: str, run_b: str, qrels_path: str, metric: str) -> int:
    qrels = load_qrels(qrels_path)
    ranking_a = load_run(run_a)
    ranking_b = load_run(run_b)
    qids = sorted(qrels)
    if set(ranking_a) != set(ranking_b):
        diff = sorted(set(ranking_a) ^ set(ranking_b))
        raise DataError(f"query ids differ between the two runs: {diff}")
    missing = [q for q in ranking_a if q not in qrels]
    if missing:
        raise DataError(f"run queries absent from qrels: {sorted(missing)}")
    values_a = [_metric_value(metric, ranking_a.get(q, []), qrels[q]) for q in qids]
    values_b = [_metric_value(metric, ranking_b.get(q, []), qrels[q]) for q in qids]
    t, p = paired_t_one_tailed(values_a, values_b)
    print(f"query\t{metric}_A\t{metric}_B\tdiff")
    for qid, va, vb in zip(qids, values_a, values_b):
        print(f"{qid}\t{va:.4f}\t{vb:.4f}\t{va - vb:+.4f}")
    mean_a = sum(values_a) / len(values_a)
    mean_b = sum(values_b) / len(values_b)
    print(f"{metric} mean A: {mean_a:.4f}")
    print(f"{metric} mean B: {mean_b:.4f}")
    if t is None:
        print("t: undefined (zero-variance differences)")
        print("verdict: undefined")
    else:
        print(f"t: {t:.4f}")
        print(f"p (one-tailed): {p:.6f}")
        print(f"verdict: {'A > B significant' if p < 0.05 else 'not significant'} at alpha 0.05")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_config_args(parser, keys):
    parser.add_argument("--config", help="key = value configuration file")
    flag_map = {}
    for key in keys:
        flag = "--" + key.replace("_", "-")
        parser.add_argument(flag, dest=f"cfg_{key}")
        flag_map[key] = f"cfg_{key}"
    return flag_map


_CONFIG_KEYS = [f.name for f in fields(RunConfig)]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="embrank", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build and persist the inverted index")
    _add_config_args(p_index, _CONFIG_KEYS)
    p_index.add_argument("--force", action="store_true",
                         help="overwrite an existing index directory")

    p_run = sub.add_parser("run", help="first pass + re-rank pipeline -> run file")
    _add_config_args(p_run, _CONFIG_KEYS)

    p_feat = sub.add_parser("features", help="extract a LETOR feature file")
    _add_config_args(p_feat, _CONFIG_KEYS)

    p_train = sub.add_parser("train", help="train the linear ranker on a LETOR file")
    _add_config_args(p_train, _CONFIG_KEYS)
    p_train.add_argument("--features", required=True, help="LETOR feature file")
    p_train.add_argument("--ranker", required=True, help="output ranker weight file")

    p_rr = sub.add_parser("rerank-supervised", help="score a LETOR file with a ranker")
    _add_config_args(p_rr, _CONFIG_KEYS)
    p_rr.add_argument("--features", required=True)
    p_rr.add_argument("--ranker", required=True)

    p_sig = sub.add_parser("significance", help="one-tailed paired t-test of two runs")
    p_sig.add_argument("--run-a", required=True)
    p_sig.add_argument("--run-b", required=True)
    p_sig.add_argument("--qrels", required=True)
    p_sig.add_argument("--metric", default="ndcg@20", choices=["ndcg@20", "p@1"])

    return parser


def _config_from_args(args) -> RunConfig:
    overrides = {
        key: getattr(args, f"cfg_{key}")
        for key in _CONFIG_KEYS
        if hasattr(args, f"cfg_{key}")
    }
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "index":
            return cmd_index(_config_from_args(args), force=args.force)
        if args.command == "run":
            return cmd_run(_config_from_args(args))
        if args.command == "features":
            return cmd_features(_config_from_args(args))
        if args.command == "train":
            return cmd_train(_config_from_args(args), args.features, args.ranker)
        if args.command == "rerank-supervised":
            return cmd_rerank_supervised(_config_from_args(args), args.features, args.ranker)
        if args.command == "significance":
            return cmd_significance(args.run_a, args.run_b, args.qrels, args.metric)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, EmbeddingFormatError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # invariant violation / unexpected failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
