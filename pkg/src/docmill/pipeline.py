"""Pre-built parse and chunk pipelines plus the benchmark harness.

One document flows extract -> header/footer removal -> link binding ->
lines/blocks -> tables -> headings -> markdown -> chunks. Batch runs
isolate per-document failures. The bench mode times the parsing stage
per page and estimates CPU energy as load x hours x rated power.
"""

from __future__ import annotations

import json
import logging
import statistics
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import psutil

from docmill import layout, tables
from docmill.chunker import Chunk, ChunkerConfig, chunk_markdown
from docmill.errors import DomainError
from docmill.fixtures import load_fixture
from docmill.headings import resolve_headings
from docmill.markdown import MarkdownDoc, PlacedTable, emit
from docmill.model import RawDocument
from docmill.pdf import extract_raw

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    """Tunable heuristics for the whole pipeline; everything positive."""

    chunker: ChunkerConfig = field(default_factory=ChunkerConfig)
    line_merge_factor: float = layout.LINE_MERGE_FACTOR
    block_gap_factor: float = layout.BLOCK_GAP_FACTOR
    link_min_overlap: float = layout.LINK_BIND_MIN_OVERLAP
    table_snap_tolerance: float = tables.SNAP_TOLERANCE

    def __post_init__(self) -> None:
        for name in (
            "line_merge_factor",
            "block_gap_factor",
            "link_min_overlap",
            "table_snap_tolerance",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        chunker = ChunkerConfig(**data.pop("chunker", {}))
        return cls(chunker=chunker, **data)


@dataclass
class DocumentResult:
    """Outcome for one input document in a batch."""

    input_path: str
    doc_id: str
    markdown: MarkdownDoc | None = None
    chunks: list[Chunk] = field(default_factory=list)
    page_count: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _load_document(path: Path) -> RawDocument:
    if path.suffix.lower() == ".json":
        return load_fixture(path)
    return extract_raw(path)


def parse_to_markdown(doc: RawDocument, cfg: PipelineConfig | None = None) -> MarkdownDoc:
    """Run every parsing heuristic over an extracted document."""
    cfg = cfg or PipelineConfig()
    doc = layout.remove_headers_footers(doc)
    doc = layout.bind_links(doc, min_overlap=cfg.link_min_overlap)
    if not doc.spans:
        return MarkdownDoc.from_text("")
    stats = layout.estimate_body_stats(doc, merge_factor=cfg.line_merge_factor)
    lines = layout.assemble_lines(doc, merge_factor=cfg.line_merge_factor)
    blocks = layout.assemble_blocks(lines, stats, gap_factor=cfg.block_gap_factor)

    grids = tables.detect_grids(list(doc.segments), snap_tolerance=cfg.table_snap_tolerance)
    placed = [PlacedTable(grid=g, cells=tables.extract_cells(g, list(doc.spans))) for g in grids]
    if grids:
        blocks = _strip_table_lines(blocks, grids)

    title_index = layout.find_main_title_block(blocks, stats)
    main_title = None
    if title_index is not None:
        main_title = " ".join(line.text for line in blocks[title_index].lines)
        blocks = blocks[:title_index] + blocks[title_index + 1 :]

    headings = resolve_headings(doc, blocks, stats)
    return emit(blocks, headings, placed, main_title)


def _strip_table_lines(blocks: list[layout.Block], grids: list[tables.Grid]) -> list[layout.Block]:
    """Lines whose center falls inside a table lattice leave the text flow."""
    grid_boxes = [(g.page_index, g.bbox) for g in grids]

    def in_table(line: layout.Line) -> bool:
        cx, cy = line.bbox.center
        return any(
            page == line.page_index and box.contains_point(cx, cy)
            for page, box in grid_boxes
        )

    out: list[layout.Block] = []
    for block in blocks:
        kept = tuple(line for line in block.lines if not in_table(line))
        if not kept:
            continue
        if len(kept) == len(block.lines):
            out.append(block)
            continue
        bbox = kept[0].bbox
        for line in kept[1:]:
            bbox = bbox.union(line.bbox)
        out.append(
            layout.Block(lines=kept, bbox=bbox, page_index=block.page_index, kind=block.kind)
        )
    return out


def parse_document(path: str | Path, cfg: PipelineConfig | None = None) -> DocumentResult:
    """Parse and chunk one file (PDF or extraction fixture)."""
    cfg = cfg or PipelineConfig()
    path = Path(path)
    result = DocumentResult(input_path=str(path), doc_id=path.stem)
    try:
        doc = _load_document(path)
        result.page_count = doc.page_count
        md = parse_to_markdown(doc, cfg)
        result.markdown = md
        result.chunks = chunk_markdown(md, cfg.chunker)
    except Exception as exc:  # per-document isolation
        logger.warning("failed to process %s: %s", path, exc)
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def run_pipeline(
    inputs: list[str | Path], cfg: PipelineConfig | None = None, jobs: int = 1
) -> list[DocumentResult]:
    """Process a batch; one document's failure never aborts the others."""
    cfg = cfg or PipelineConfig()
    paths = [Path(p) for p in inputs]
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(parse_document, paths, [cfg] * len(paths)))
    return [parse_document(p, cfg) for p in paths]


# -- benchmarking -------------------------------------------------------------


def compute_cpu_energy(load_fraction: float, hours: float, power_watts: float) -> float:
    """Estimated CPU energy in watt-hours: load x time x rated power."""
    if not 0.0 <= load_fraction <= 1.0:
        raise DomainError("load_fraction must be in [0, 1]")
    if hours < 0.0:
        raise DomainError("hours must be >= 0")
    if power_watts <= 0.0:
        raise DomainError("power_watts must be > 0")
    return load_fraction * hours * power_watts


class CpuLoadSampler:
    """Background thread sampling this process's CPU use at >= 1 Hz.

    Samples are normalized by logical core count, so the mean is the
    fraction of the machine's total CPU capacity this process used.
    """

    def __init__(self, interval: float = 0.5) -> None:
        self.interval = interval
        self.samples: list[float] = []
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._process = psutil.Process()

    def __enter__(self) -> "CpuLoadSampler":
        self._process.cpu_percent(interval=None)  # prime the counter
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()
        return self

    def _loop(self) -> None:
        cores = psutil.cpu_count(logical=True) or 1
        while not self._stop.wait(self.interval):
            percent = self._process.cpu_percent(interval=None)
            self.samples.append(min(percent / 100.0 / cores, 1.0))

    def __exit__(self, *exc_info) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        cores = psutil.cpu_count(logical=True) or 1
        final = self._process.cpu_percent(interval=None)
        self.samples.append(min(final / 100.0 / cores, 1.0))

    @property
    def mean_load(self) -> float:
        if not self.samples:
            return 0.0
        return sum(self.samples) / len(self.samples)


@dataclass
class BenchReport:
    """Per-page timing and energy estimate for a parse-only run."""

    documents: list[dict]
    page_counts: list[int]
    per_page_ms_mean: float
    per_page_ms_std: float
    total_wall_hours: float
    mean_cpu_load: float
    cpu_power_watts: float
    cpu_energy_wh: float
    gpu_energy_wh: float = 0.0
    errors: list[dict] = field(default_factory=list)

    def timing_summary(self) -> str:
        return f"{self.per_page_ms_mean:.0f} ms ± {self.per_page_ms_std:.0f}"

    def to_dict(self) -> dict:
        return asdict(self)


def bench_parse(
    inputs: list[str | Path],
    cfg: PipelineConfig | None = None,
    power_watts: float = 65.0,
) -> BenchReport:
    """Time the parsing stage per page, one document at a time.

    Chunking is excluded from the timing; its cost is negligible next to
    parsing. GPU energy is structurally zero: nothing here touches one.
    """
    cfg = cfg or PipelineConfig()
    documents: list[dict] = []
    errors: list[dict] = []
    page_series: list[float] = []
    page_counts: list[int] = []
    total_seconds = 0.0

    with CpuLoadSampler() as sampler:
        for path in inputs:
            path = Path(path)
            start = time.perf_counter()
            try:
                doc = _load_document(path)
                parse_to_markdown(doc, cfg)
            except Exception as exc:
                errors.append({"input": str(path), "error": f"{type(exc).__name__}: {exc}"})
                continue
            elapsed = time.perf_counter() - start
            total_seconds += elapsed
            pages = max(doc.page_count, 1)
            page_counts.append(doc.page_count)
            per_page_ms = elapsed * 1000.0 / pages
            page_series.extend([per_page_ms] * pages)
            documents.append(
                {
                    "input": str(path),
                    "pages": doc.page_count,
                    "seconds": round(elapsed, 6),
                    "per_page_ms": round(per_page_ms, 3),
                }
            )

    mean_ms = statistics.fmean(page_series) if page_series else 0.0
    std_ms = statistics.pstdev(page_series) if len(page_series) > 1 else 0.0
    hours = total_seconds / 3600.0
    load = sampler.mean_load
    return BenchReport(
        documents=documents,
        page_counts=page_counts,
        per_page_ms_mean=mean_ms,
        per_page_ms_std=std_ms,
        total_wall_hours=hours,
        mean_cpu_load=load,
        cpu_power_watts=power_watts,
        cpu_energy_wh=compute_cpu_energy(load, hours, power_watts),
        errors=errors,
    )
