"""Table reconstruction from ruling-line lattices.

Axis-aligned drawn segments are snapped, chained into maximal rules,
grouped into connected lattices, and read back as cell grids (including
merged cells where interior edges are missing). Qualifying lattices
render as markdown pipe tables.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from docmill.model import DrawSegment, Rect, Span

logger = logging.getLogger(__name__)

# coordinates this close collapse onto one rule, and collinear pieces
# with gaps up to this chain into a single rule
SNAP_TOLERANCE = 2.0


@dataclass(frozen=True)
class Grid:
    """A table lattice: rule positions plus which edges are drawn.

    ``h_edges[i][j]`` is the horizontal edge at ys[i] between xs[j] and
    xs[j+1]; ``v_edges[i][j]`` is the vertical edge at xs[j] between
    ys[i] and ys[i+1].
    """

    page_index: int
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    h_edges: tuple[tuple[bool, ...], ...]
    v_edges: tuple[tuple[bool, ...], ...]

    @property
    def rows(self) -> int:
        return len(self.ys) - 1

    @property
    def cols(self) -> int:
        return len(self.xs) - 1

    @property
    def bbox(self) -> Rect:
        return Rect(self.xs[0], self.ys[0], self.xs[-1], self.ys[-1])


@dataclass(frozen=True)
class TableCell:
    row: int
    col: int
    row_span: int
    col_span: int
    text: str


@dataclass(frozen=True)
class _Rule:
    """A maximal straight rule after snapping/chaining."""

    axis: str  # "h" or "v"
    pos: float  # y for horizontal, x for vertical
    start: float
    end: float


def _cluster(values: list[float], tol: float) -> dict[float, float]:
    """Map each value to the mean of its tolerance-linked cluster."""
    mapping: dict[float, float] = {}
    for value in sorted(set(values)):
        mapping[value] = value
    ordered = sorted(mapping)
    groups: list[list[float]] = []
    for value in ordered:
        if groups and value - groups[-1][-1] <= tol:
            groups[-1].append(value)
        else:
            groups.append([value])
    for group in groups:
        center = sum(group) / len(group)
        for value in group:
            mapping[value] = center
    return mapping


def _merge_intervals(intervals: list[tuple[float, float]], tol: float) -> list[tuple[float, float]]:
    intervals = sorted(intervals)
    merged: list[list[float]] = []
    for start, end in intervals:
        if merged and start <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(s, e) for s, e in merged]


def _snap_rules(segments: list[DrawSegment], tol: float) -> list[_Rule]:
    horiz: list[tuple[float, float, float]] = []  # (y, x0, x1)
    vert: list[tuple[float, float, float]] = []  # (x, y0, y1)
    for seg in segments:
        dx = abs(seg.p1[0] - seg.p0[0])
        dy = abs(seg.p1[1] - seg.p0[1])
        if dy <= tol and dx > dy:
            y = (seg.p0[1] + seg.p1[1]) / 2.0
            horiz.append((y, min(seg.p0[0], seg.p1[0]), max(seg.p0[0], seg.p1[0])))
        elif dx <= tol and dy > dx:
            x = (seg.p0[0] + seg.p1[0]) / 2.0
            vert.append((x, min(seg.p0[1], seg.p1[1]), max(seg.p0[1], seg.p1[1])))

    rules: list[_Rule] = []
    y_snap = _cluster([y for y, _, _ in horiz], tol)
    by_y: dict[float, list[tuple[float, float]]] = {}
    for y, x0, x1 in horiz:
        by_y.setdefault(y_snap[y], []).append((x0, x1))
    for y, intervals in by_y.items():
        for start, end in _merge_intervals(intervals, tol):
            rules.append(_Rule("h", y, start, end))

    x_snap = _cluster([x for x, _, _ in vert], tol)
    by_x: dict[float, list[tuple[float, float]]] = {}
    for x, y0, y1 in vert:
        by_x.setdefault(x_snap[x], []).append((y0, y1))
    for x, intervals in by_x.items():
        for start, end in _merge_intervals(intervals, tol):
            rules.append(_Rule("v", x, start, end))
    return rules


def _rules_cross(h: _Rule, v: _Rule, tol: float) -> bool:
    return (
        h.start - tol <= v.pos <= h.end + tol
        and v.start - tol <= h.pos <= v.end + tol
    )


def detect_grids(
    segments: list[DrawSegment], snap_tolerance: float = SNAP_TOLERANCE
) -> list[Grid]:
    """Find table lattices with at least 2 rows and 2 columns per page."""
    grids: list[Grid] = []
    pages = sorted({seg.page_index for seg in segments})
    for page in pages:
        page_segments = [s for s in segments if s.page_index == page]
        rules = _snap_rules(page_segments, snap_tolerance)
        h_rules = [r for r in rules if r.axis == "h"]
        v_rules = [r for r in rules if r.axis == "v"]
        if len(h_rules) < 3 or len(v_rules) < 3:
            continue

        # connected components over the crossing graph
        parent = list(range(len(rules)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        def union(i: int, j: int) -> None:
            parent[find(i)] = find(j)

        h_index = [i for i, r in enumerate(rules) if r.axis == "h"]
        v_index = [i for i, r in enumerate(rules) if r.axis == "v"]
        for hi in h_index:
            for vi in v_index:
                if _rules_cross(rules[hi], rules[vi], snap_tolerance):
                    union(hi, vi)

        components: dict[int, list[_Rule]] = {}
        for i, rule in enumerate(rules):
            components.setdefault(find(i), []).append(rule)

        for component in components.values():
            grid = _component_to_grid(component, page, snap_tolerance)
            if grid is not None:
                grids.append(grid)
    grids.sort(key=lambda g: (g.page_index, g.ys[0], g.xs[0]))
    return grids


def _component_to_grid(component: list[_Rule], page: int, tol: float) -> Grid | None:
    hs = sorted((r for r in component if r.axis == "h"), key=lambda r: r.pos)
    vs = sorted((r for r in component if r.axis == "v"), key=lambda r: r.pos)
    crossings = sum(1 for h in hs for v in vs if _rules_cross(h, v, tol))
    # disjoint pieces can share a snapped coordinate; positions dedupe
    ys = tuple(sorted({r.pos for r in hs}))
    xs = tuple(sorted({r.pos for r in vs}))
    if len(xs) < 3 or len(ys) < 3 or crossings < 4:
        return None

    def h_edge_present(i: int, j: int) -> bool:
        lo, hi = xs[j], xs[j + 1]
        return any(
            r.pos == ys[i] and r.start <= lo + tol and r.end >= hi - tol for r in hs
        )

    def v_edge_present(i: int, j: int) -> bool:
        lo, hi = ys[i], ys[i + 1]
        return any(
            r.pos == xs[j] and r.start <= lo + tol and r.end >= hi - tol for r in vs
        )

    h_edges = tuple(
        tuple(h_edge_present(i, j) for j in range(len(xs) - 1)) for i in range(len(ys))
    )
    v_edges = tuple(
        tuple(v_edge_present(i, j) for j in range(len(xs))) for i in range(len(ys) - 1)
    )
    return Grid(page_index=page, xs=xs, ys=ys, h_edges=h_edges, v_edges=v_edges)


def extract_cells(grid: Grid, spans: list[Span]) -> list[TableCell]:
    """Read cell contents, merging unit cells across missing interior edges."""
    rows, cols = grid.rows, grid.cols
    parent = list(range(rows * cols))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        parent[find(i)] = find(j)

    for r in range(rows):
        for c in range(cols - 1):
            if not grid.v_edges[r][c + 1]:
                union(r * cols + c, r * cols + c + 1)
    for r in range(rows - 1):
        for c in range(cols):
            if not grid.h_edges[r + 1][c]:
                union(r * cols + c, (r + 1) * cols + c)

    regions: dict[int, list[tuple[int, int]]] = {}
    for r in range(rows):
        for c in range(cols):
            regions.setdefault(find(r * cols + c), []).append((r, c))

    # non-rectangular merge regions fall back to unmerged unit cells
    shapes: list[tuple[int, int, int, int]] = []
    for cells in regions.values():
        r0 = min(r for r, _ in cells)
        r1 = max(r for r, _ in cells)
        c0 = min(c for _, c in cells)
        c1 = max(c for _, c in cells)
        if len(cells) != (r1 - r0 + 1) * (c1 - c0 + 1):
            logger.warning(
                "non-rectangular merge region on page %d; treating as unmerged",
                grid.page_index,
            )
            shapes.extend((r, c, r, c) for r, c in cells)
        else:
            shapes.append((r0, c0, r1, c1))

    page_spans = [
        s
        for s in spans
        if s.page_index == grid.page_index
        and grid.bbox.contains_point(*s.bbox.center)
    ]
    page_spans.sort(key=lambda s: (s.bbox.y1, s.bbox.x0))

    cells_out: list[TableCell] = []
    for r0, c0, r1, c1 in sorted(shapes):
        rect = Rect(grid.xs[c0], grid.ys[r0], grid.xs[c1 + 1], grid.ys[r1 + 1])
        texts = [s.text for s in page_spans if rect.contains_point(*s.bbox.center)]
        cells_out.append(
            TableCell(
                row=r0,
                col=c0,
                row_span=r1 - r0 + 1,
                col_span=c1 - c0 + 1,
                text=" ".join(texts),
            )
        )
    return cells_out


def _escape_cell(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ")


def render_table(cells: list[TableCell], grid: Grid) -> str:
    """Serialize cells as a pipe table; merged text sits in its top-left
    unit cell and covered cells stay blank."""
    rows, cols = grid.rows, grid.cols
    matrix = [["" for _ in range(cols)] for _ in range(rows)]
    for cell in cells:
        matrix[cell.row][cell.col] = _escape_cell(cell.text)
    lines = ["| " + " | ".join(matrix[0]) + " |" if cols else "|  |"]
    lines.append("| " + " | ".join("---" for _ in range(cols)) + " |")
    for row in matrix[1:]:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def parse_pipe_table(markdown: str) -> list[list[str]]:
    """Inverse of render_table for full lattices: rows of cell texts."""
    rows: list[list[str]] = []
    for line_no, line in enumerate(markdown.splitlines()):
        line = line.strip()
        if not line.startswith("|"):
            continue
        if line_no == 1:  # separator row
            continue
        inner = line[1:-1] if line.endswith("|") else line[1:]
        cells = re.split(r"(?<!\\)\|", inner)
        rows.append([c.strip().replace("\\|", "|") for c in cells])
    return rows
