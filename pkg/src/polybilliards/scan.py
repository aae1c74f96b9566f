"""Grid scans of periodic-orbit existence over families of polyhedra.

A scan moves chosen vertex coordinates over a rectangular grid and runs
:func:`find_periodic` in every cell. Cells whose vertices no longer form a
valid convex polyhedron are kept and marked invalid.
"""
from __future__ import annotations

import csv
import io
import itertools
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .billiard import Word, format_word, validate_word
from .errors import GeometryError, PreconditionError
from .fixtures import regular_tetrahedron
from .geometry import Polyhedron
from .periodic import find_periodic

_AXES = "xyz"


@dataclass(frozen=True)
class VertexRange:
    """Coordinate ``axis`` (0, 1, 2) of vertex ``vertex`` swept over ``[lo, hi]``."""

    vertex: str
    axis: int
    lo: float
    hi: float

    @property
    def name(self) -> str:
        return f"{self.vertex}.{_AXES[self.axis]}"

    @classmethod
    def parse(cls, text: str) -> "VertexRange":
        """Read ``"D.x=-0.01:0.01"``; the vertex is a label or an index."""
        m = re.fullmatch(r"\s*([^.=\s]+)\.([xyz])\s*=\s*([^:]+):(.+)", text)
        if not m:
            raise PreconditionError(f"cannot parse vertex range {text!r}; expected V.c=lo:hi")
        lo, hi = float(m.group(3)), float(m.group(4))
        if hi < lo:
            raise PreconditionError(f"empty range in {text!r}")
        return cls(m.group(1), _AXES.index(m.group(2)), lo, hi)


@dataclass(frozen=True)
class ScanCell:
    index: int
    params: tuple[float, ...]
    valid: bool
    kind: str
    point: tuple[float, ...] | None
    direction: tuple[float, ...] | None
    diagnostic: str


@dataclass(frozen=True, eq=False)
class ScanGrid:
    """Results of a scan, ordered by cell index (last axis varies fastest)."""

    tag: str
    word: Word
    axes: tuple[str, ...]
    resolution: int
    cells: tuple[ScanCell, ...]

    def fraction(self, kind: str) -> float:
        if not self.cells:
            return 0.0
        return sum(c.kind == kind for c in self.cells) / len(self.cells)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.cells:
            out[c.kind] = out.get(c.kind, 0) + 1
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cell", *self.axes, "valid", "kind", "px", "py", "pz", "dx", "dy", "dz", "diagnostic"])
        for c in self.cells:
            point = [repr(x) for x in c.point] if c.point else ["", "", ""]
            direction = [repr(x) for x in c.direction] if c.direction else ["", "", ""]
            writer.writerow(
                [c.index, *map(repr, c.params), int(c.valid), c.kind, *point, *direction, c.diagnostic]
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "word": format_word(self.word),
            "axes": list(self.axes),
            "resolution": self.resolution,
            "counts": self.counts(),
            "cells": [
                {
                    "index": c.index,
                    "params": list(c.params),
                    "valid": c.valid,
                    "kind": c.kind,
                    "point": None if c.point is None else list(c.point),
                    "direction": None if c.direction is None else list(c.direction),
                    "diagnostic": c.diagnostic,
                }
                for c in self.cells
            ],
        }


def _axis_values(lo: float, hi: float, resolution: int) -> np.ndarray:
    if resolution == 1:
        return np.array([(lo + hi) / 2.0])
    return np.linspace(lo, hi, resolution)


def _vertex_index(poly: Polyhedron, vertex: str) -> int:
    if poly.vertex_labels is not None and vertex in poly.vertex_labels:
        return poly.vertex_labels.index(vertex)
    if vertex.isdigit() and int(vertex) < len(poly.vertices):
        return int(vertex)
    raise PreconditionError(f"unknown vertex {vertex!r}")


def _scan_cell(args) -> ScanCell:
    index, base, word, targets, params = args
    verts = np.array(base.vertices)
    for (vi, axis), value in zip(targets, params):
        verts[vi, axis] += value
    clean = tuple(float(p) for p in params)
    try:
        poly = base.with_vertices(verts)
    except GeometryError as exc:
        return ScanCell(index, clean, False, "invalid", None, None, str(exc))
    res = find_periodic(poly, word)
    point = None if res.point is None else tuple(float(x) + 0.0 for x in res.point)
    direction = None if res.direction is None else tuple(float(x) + 0.0 for x in res.direction)
    return ScanCell(index, clean, True, res.kind.value, point, direction, res.diagnostic)


def scan_vertex_ranges(
    base: Polyhedron,
    ranges: Sequence[VertexRange],
    resolution: int,
    word: str | Sequence[str] = "abcd",
    workers: int | None = 1,
    tag: str = "vertex-ranges",
) -> ScanGrid:
    """Add offsets from each range to the base coordinates and classify ``word``.

    Every range is sampled at ``resolution`` evenly spaced values (its midpoint
    when ``resolution`` is 1). Without ranges the grid is the single base cell.

    Raises:
        PreconditionError: if ``resolution < 1`` or a range names an unknown vertex.
    """
    if resolution < 1:
        raise PreconditionError("resolution must be >= 1")
    word = validate_word(base, word)
    targets = [(_vertex_index(base, r.vertex), r.axis) for r in ranges]
    axes_values = [_axis_values(r.lo, r.hi, resolution) for r in ranges]
    jobs = [
        (i, base, word, targets, params)
        for i, params in enumerate(itertools.product(*axes_values))
    ]
    if workers is not None and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = tuple(pool.map(_scan_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        cells = tuple(_scan_cell(j) for j in jobs)
    return ScanGrid(tag, word, tuple(r.name for r in ranges), resolution, cells)


def scan_around_regular(
    delta: float,
    resolution: int,
    word: str | Sequence[str] = "abcd",
    vertex: str = "D",
    workers: int | None = 1,
) -> ScanGrid:
    """Move one vertex of the regular tetrahedron over the cube ``[-delta, delta]^3``."""
    if delta < 0:
        raise PreconditionError("delta must be non-negative")
    ranges = [VertexRange(vertex, axis, -delta, delta) for axis in range(3)]
    return scan_vertex_ranges(
        regular_tetrahedron(), ranges, resolution, word, workers, tag=f"around-regular:{vertex}"
    )
