"""Command-line interface: parse, chunk, bench and eval."""

from __future__ import annotations

import glob as globlib
import json
import logging
import sys
from pathlib import Path

import click

from docmill.chunker import ChunkerConfig, chunk_markdown, write_chunks_jsonl
from docmill.evaluation import EmbedderSpec, run_eval
from docmill.markdown import MarkdownDoc
from docmill.pipeline import PipelineConfig, bench_parse, parse_document, run_pipeline

CONFIG_ENV_VAR = "DOCMILL_CONFIG"

logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


def _load_config(path: str | None) -> PipelineConfig:
    if path:
        return PipelineConfig.from_file(path)
    return PipelineConfig()


def _expand(patterns: tuple[str, ...]) -> list[Path]:
    paths: list[Path] = []
    for pattern in patterns:
        hits = sorted(globlib.glob(pattern))
        if hits:
            paths.extend(Path(h) for h in hits)
        else:
            paths.append(Path(pattern))
    return paths


@click.group()
def main() -> None:
    """Heuristic PDF parsing and title-aware chunking for retrieval."""


@main.command()
@click.argument("paths", nargs=-1)
@click.option("--spans", "spans_fixture", type=click.Path(exists=True), default=None,
              help="Parse from an extraction fixture instead of PDFs.")
@click.option("--out", "out_format", type=click.Choice(["md", "json"]), default="md",
              help="Output markdown text or a JSON debug dump.")
@click.option("--jobs", type=int, default=1, help="Parallel documents.")
@click.option("--config", envvar=CONFIG_ENV_VAR, type=click.Path(exists=True), default=None)
def parse(paths: tuple[str, ...], spans_fixture: str | None, out_format: str,
          jobs: int, config: str | None) -> None:
    """Convert PDFs (or a spans fixture) to structured markdown."""
    cfg = _load_config(config)
    inputs = [Path(spans_fixture)] if spans_fixture else _expand(paths)
    if not inputs:
        return
    results = run_pipeline(inputs, cfg, jobs=jobs)
    failed = [r for r in results if not r.ok]
    multi = len(results) > 1
    for result in results:
        if not result.ok:
            click.echo(f"error: {result.input_path}: {result.error}", err=True)
            continue
        assert result.markdown is not None
        if out_format == "md":
            payload = result.markdown.text
            suffix = ".md"
        else:
            payload = json.dumps(
                {
                    "doc_id": result.doc_id,
                    "main_title": result.markdown.main_title,
                    "markdown": result.markdown.text,
                    "line_pages": {
                        str(k): list(v) for k, v in sorted(result.markdown.line_pages.items())
                    },
                    "pages": result.page_count,
                },
                indent=2,
                sort_keys=True,
                ensure_ascii=False,
            )
            suffix = ".parsed.json"
        if multi:
            target = Path(result.input_path).with_suffix(suffix)
            target.write_text(payload + "\n", encoding="utf-8")
            click.echo(f"wrote {target}", err=True)
        else:
            click.echo(payload)
    if failed:
        sys.exit(1)


@main.command()
@click.argument("path")
@click.option("--soft-limit", type=int, default=250, show_default=True)
@click.option("--hard-limit", type=int, default=400, show_default=True)
@click.option("--min-words", type=int, default=15, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write chunk JSONL here instead of stdout.")
@click.option("--config", envvar=CONFIG_ENV_VAR, type=click.Path(exists=True), default=None)
def chunk(path: str, soft_limit: int, hard_limit: int, min_words: int,
          out_path: str | None, config: str | None) -> None:
    """Chunk a PDF, extraction fixture, or markdown file."""
    cfg = _load_config(config)
    cfg.chunker = ChunkerConfig(
        soft_limit_words=soft_limit, hard_limit_words=hard_limit, min_words=min_words
    )
    source = Path(path)
    if source.suffix.lower() in (".md", ".markdown", ".txt"):
        md = MarkdownDoc.from_text(source.read_text(encoding="utf-8"))
        chunks = chunk_markdown(md, cfg.chunker)
        doc_id = source.stem
    else:
        result = parse_document(source, cfg)
        if not result.ok:
            click.echo(f"error: {result.error}", err=True)
            sys.exit(1)
        chunks = result.chunks
        doc_id = result.doc_id
    if out_path:
        write_chunks_jsonl(chunks, out_path, doc_id)
        click.echo(f"wrote {len(chunks)} chunks to {out_path}", err=True)
    else:
        for c in chunks:
            click.echo(json.dumps(c.to_record(doc_id), sort_keys=True, ensure_ascii=False))


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--cpu-tdp", type=float, required=True,
              help="Rated CPU power in watts (manufacturer TDP).")
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--config", envvar=CONFIG_ENV_VAR, type=click.Path(exists=True), default=None)
def bench(directory: str, cpu_tdp: float, report_path: str | None, config: str | None) -> None:
    """Time per-page parsing over a directory of PDFs and estimate energy."""
    cfg = _load_config(config)
    inputs = sorted(
        p for p in Path(directory).iterdir() if p.suffix.lower() in (".pdf", ".json")
    )
    report = bench_parse(inputs, cfg, power_watts=cpu_tdp)
    click.echo(f"documents: {len(report.documents)}  pages: {sum(report.page_counts)}")
    click.echo(f"per-page parse time: {report.timing_summary()}")
    click.echo(f"total wall time: {report.total_wall_hours:.6f} h")
    click.echo(f"mean CPU load: {report.mean_cpu_load:.3f}")
    click.echo(f"CPU energy: {report.cpu_energy_wh:.6f} Wh")
    click.echo(f"GPU energy: {report.gpu_energy_wh:.1f} Wh")
    if report_path:
        Path(report_path).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        click.echo(f"wrote {report_path}", err=True)
    if report.errors:
        for err in report.errors:
            click.echo(f"error: {err['input']}: {err['error']}", err=True)
        sys.exit(1)


@main.command(name="eval")
@click.option("--dataset", type=click.Path(exists=True), required=True,
              help="Question JSONL (single and/or multi mode rows).")
@click.option("--chunks", "chunks_path", type=click.Path(exists=True), required=True,
              help="Chunk JSONL produced by the chunk command.")
@click.option("--embedder", default="hash", show_default=True,
              help="'hash' or a remote endpoint URL.")
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--cache", "cache_path", type=click.Path(), default=None,
              help="Embedding cache file (lets aborted runs resume).")
@click.option("--fuzzy", is_flag=True, default=False,
              help="Accept 80% token overlap when judging single-mode relevance.")
@click.option("--report", "report_path", type=click.Path(), default=None)
def eval_cmd(dataset: str, chunks_path: str, embedder: str, k: int,
             batch_size: int, cache_path: str | None, fuzzy: bool,
             report_path: str | None) -> None:
    """Score retrieval quality (recall@k, NDCG@k) for a chunked corpus."""
    spec = EmbedderSpec(backend=embedder, batch_size=batch_size)
    report = run_eval(dataset, chunks_path, spec, k=k, cache_path=cache_path, fuzzy=fuzzy)
    aggregates = report.aggregate()
    click.echo(json.dumps(aggregates, indent=2, sort_keys=True))
    if report_path:
        Path(report_path).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        click.echo(f"wrote {report_path}", err=True)


if __name__ == "__main__":
    main()
