"""docmill: heuristic PDF-to-markdown parsing and title-aware chunking.

ML-free document ingestion for retrieval pipelines: extract spans from
PDFs, clean and structure them into markdown, split the markdown into
context-preserving chunks, and benchmark the whole thing.

Typical use:

    from docmill import parse_document, ChunkerConfig

    result = parse_document("report.pdf")
    print(result.markdown.text)
    for chunk in result.chunks:
        print(chunk.to_record(result.doc_id))
"""

from docmill.chunker import Chunk, ChunkerConfig, chunk_markdown
from docmill.fixtures import dump_fixture, load_fixture
from docmill.markdown import MarkdownDoc
from docmill.model import (
    DrawSegment,
    LinkBox,
    MetadataTocEntry,
    RawDocument,
    Rect,
    Span,
)
from docmill.pdf import extract_raw
from docmill.pipeline import (
    BenchReport,
    DocumentResult,
    PipelineConfig,
    bench_parse,
    compute_cpu_energy,
    parse_document,
    parse_to_markdown,
    run_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "Chunk",
    "ChunkerConfig",
    "DocumentResult",
    "DrawSegment",
    "LinkBox",
    "MarkdownDoc",
    "MetadataTocEntry",
    "PipelineConfig",
    "RawDocument",
    "Rect",
    "Span",
    "__version__",
    "bench_parse",
    "chunk_markdown",
    "compute_cpu_energy",
    "dump_fixture",
    "extract_raw",
    "load_fixture",
    "parse_document",
    "parse_to_markdown",
    "run_pipeline",
]
