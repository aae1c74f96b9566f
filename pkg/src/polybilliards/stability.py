"""Stability of periodic words under small perturbations of the polyhedron.

A periodic word is stable when it stays periodic for every polyhedron close
enough to the given one. The decision uses the linear part ``S_v``:

* even words are stable exactly when ``S_v`` is not the identity;
* odd words are unstable as soon as ``S_v`` stops being a reflection for some
  perturbation. Random sampling can only witness this; if no sample moves
  ``S_v`` away from a reflection the verdict stays indeterminate.

Right prisms get an extra check through their projection to the base polygon.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .billiard import Word, format_word, validate_word, word_isometry
from .errors import GeometryError, PreconditionError
from .geometry import Polyhedron
from .isometry import classify
from .periodic import PeriodicKind, find_periodic

IDENTITY_TOL = 1e-9
REFLECTION_DEFECT_TOL = 1e-6
MAX_TRIES = 100


class PerturbationError(PreconditionError):
    """No admissible perturbation of the requested size could be drawn."""


class Verdict(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    INDETERMINATE = "indeterminate"


class StabilityRule(str, Enum):
    EVEN_S_NOT_IDENTITY = "even_S_not_identity"
    EVEN_S_IDENTITY = "even_S_identity"
    ODD_S_NONCONSTANT_SAMPLED = "odd_S_nonconstant_sampled"
    ODD_S_CONSTANT_SAMPLED = "odd_S_constant_sampled"


ODD_CAVEAT = (
    "no sampled perturbation moved S_v away from a reflection; sampling cannot "
    "certify stability of an odd word"
)


# -- perturbations --------------------------------------------------------------
def _is_simplicial(poly: Polyhedron) -> bool:
    return all(len(f.vertices) == 3 for f in poly.faces)


def _is_simple(poly: Polyhedron) -> bool:
    counts = np.zeros(len(poly.vertices), dtype=int)
    for f in poly.faces:
        counts[list(f.vertices)] += 1
    return bool(np.all(counts == 3))


def certified_radius(poly: Polyhedron) -> float | None:
    """Largest ``delta`` for which any vertex moves of size <= delta keep every
    triangular face plane strictly separating the remaining vertices.

    For a face ``p0 p1 p2`` and another vertex ``w`` the signed volume
    ``det(p1 - p0, p2 - p0, w - p0)`` changes by at most
    ``prod(|x_i| + 2 delta) - prod(|x_i|)``; the radius keeps that below the
    volume itself. Returns None when some face is not a triangle.
    """
    if not _is_simplicial(poly):
        return None
    verts = poly.vertices
    best = np.inf
    for f in poly.faces:
        i0, i1, i2 = f.vertices
        p0 = verts[i0]
        for w in range(len(verts)):
            if w in f.vertices:
                continue
            cols = np.array([verts[i1] - p0, verts[i2] - p0, verts[w] - p0])
            vol = abs(np.linalg.det(cols))
            a, b, c = np.linalg.norm(cols, axis=1)
            # (a + 2d)(b + 2d)(c + 2d) - abc - vol = 0, increasing in d >= 0
            roots = np.roots([8.0, 4.0 * (a + b + c), 2.0 * (a * b + b * c + c * a), -vol])
            real = roots[np.abs(roots.imag) < 1e-12].real
            best = min(best, float(real[real > 0].min()))
    return best


@dataclass(frozen=True, eq=False)
class Perturbation:
    """A perturbed polyhedron and how far each vertex moved."""

    polyhedron: Polyhedron
    displacements: np.ndarray
    delta: float
    seed: object = None
    attempts: int = 0

    @property
    def max_displacement(self) -> float:
        if len(self.displacements) == 0:
            return 0.0
        return float(np.linalg.norm(self.displacements, axis=1).max())


def _ball(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((n, 3))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (radius * rng.random(n) ** (1.0 / 3.0))[:, None]


def _vertex_planes(poly: Polyhedron) -> list[tuple[str, str, str]]:
    incident = [[] for _ in poly.vertices]
    for f in poly.faces:
        for i in f.vertices:
            incident[i].append(f.label)
    return [tuple(x) for x in incident]


def _perturb_simplicial(poly, delta, rng, seed):
    radius = certified_radius(poly)
    if delta >= radius:
        raise PerturbationError(
            f"delta={delta:g} is not below the certified radius {radius:.6g} of this polyhedron"
        )
    for attempt in range(1, MAX_TRIES + 1):
        disp = _ball(rng, len(poly.vertices), delta)
        try:
            return Perturbation(poly.with_vertices(poly.vertices + disp), disp, delta, seed, attempt)
        except GeometryError:
            continue
    raise PerturbationError(f"no valid perturbation with delta={delta:g} after {MAX_TRIES} draws")


def _perturb_planes(poly, delta, rng, seed):
    """Move face planes and recompute vertices as triple plane intersections."""
    planes = _vertex_planes(poly)
    normals = {lab: poly.plane(lab).normal for lab in poly.labels}
    centroid = poly.centroid
    reach = float(np.linalg.norm(poly.vertices - centroid, axis=1).max())
    cond = max(np.linalg.norm(np.linalg.inv(np.array([normals[l] for l in trio])), 2) for trio in planes)
    eta = delta / (2.0 * np.sqrt(3.0) * cond * (1.0 + reach))
    for attempt in range(1, MAX_TRIES + 1):
        new = {}
        for lab in poly.labels:
            fp = poly.plane(lab)
            n = fp.normal + _ball(rng, 1, eta)[0]
            n /= np.linalg.norm(n)
            d = fp.offset - fp.normal @ centroid + eta * (2.0 * rng.random() - 1.0)
            new[lab] = (n, d + n @ centroid)
        verts = np.array(
            [
                np.linalg.solve(np.array([new[l][0] for l in trio]), np.array([new[l][1] for l in trio]))
                for trio in planes
            ]
        )
        disp = verts - poly.vertices
        if np.linalg.norm(disp, axis=1).max() > delta:
            continue
        try:
            return Perturbation(poly.with_vertices(verts), disp, delta, seed, attempt)
        except GeometryError:
            continue
    raise PerturbationError(f"no valid perturbation with delta={delta:g} after {MAX_TRIES} draws")


def perturbation(poly: Polyhedron, delta: float, seed=None) -> Perturbation:
    """Random polyhedron whose vertices are within ``delta`` of ``poly``'s.

    Tetrahedra and other simplicial solids move each vertex uniformly in its
    ``delta`` ball. Simple solids (three faces per vertex) tilt and shift the
    face planes so faces stay planar, rejecting draws that move a vertex more
    than ``delta``.

    Raises:
        PerturbationError: if ``delta`` is too large to keep the combinatorics
            or no valid draw is found.
        PreconditionError: if ``poly`` is neither simplicial nor simple.
    """
    if delta < 0:
        raise PreconditionError("delta must be non-negative")
    if delta == 0:
        return Perturbation(poly, np.zeros_like(poly.vertices), 0.0, seed)
    rng = np.random.default_rng(seed)
    if _is_simplicial(poly):
        return _perturb_simplicial(poly, delta, rng, seed)
    if _is_simple(poly):
        return _perturb_planes(poly, delta, rng, seed)
    raise PreconditionError("planar perturbation needs triangular faces or three faces at every vertex")


def perturb(poly: Polyhedron, delta: float, seed=None) -> Polyhedron:
    """Shortcut for ``perturbation(poly, delta, seed).polyhedron``."""
    return perturbation(poly, delta, seed).polyhedron


# -- classification -----------------------------------------------------------
def reflection_defect(L) -> float:
    """How far an orthogonal ``L`` with det -1 is from a plane reflection.

    Such an ``L`` is a rotoreflection with angle ``phi``; ``trace = 2 cos(phi) - 1``
    and the defect ``sqrt(1 - trace) = 2 sin(phi / 2)`` vanishes only for a
    reflection.
    """
    L = np.asarray(L, dtype=float)
    if np.linalg.det(L) > 0:
        return float("inf")
    return float(np.sqrt(max(0.0, 1.0 - np.trace(L))))


@dataclass(frozen=True)
class SampleEvidence:
    """What one perturbed polyhedron showed."""

    index: int
    max_displacement: float
    isometry_class: str
    linear_identity: bool
    reflection_defect: float | None
    periodic_kind: str
    diagnostic: str
    witness_shift: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True, eq=False)
class StabilityReport:
    word: Word
    verdict: Verdict
    rule: StabilityRule
    n_samples: int
    delta: float
    seed: int | None
    caveat: str | None = None
    samples: tuple[SampleEvidence, ...] = ()
    continuity_constant: float | None = None
    base: dict = field(default_factory=dict)

    @property
    def still_periodic(self) -> int:
        return sum(s.periodic_kind in _EXISTING for s in self.samples)

    def summary(self) -> str:
        return f"rule={self.rule.value} verdict={self.verdict.value}"

    def to_dict(self) -> dict:
        return {
            "word": format_word(self.word),
            "verdict": self.verdict.value,
            "rule": self.rule.value,
            "n_samples": self.n_samples,
            "delta": self.delta,
            "seed": self.seed,
            "caveat": self.caveat,
            "still_periodic": self.still_periodic,
            "continuity_constant": self.continuity_constant,
            "base": self.base,
            "samples": [s.to_dict() for s in self.samples],
        }


_EXISTING = {PeriodicKind.UNIQUE_POINT.value, PeriodicKind.SEGMENT.value, PeriodicKind.OPEN_SET.value}


def _evaluate_sample(args) -> SampleEvidence:
    index, poly, word, delta, seed_seq, base_point = args
    pert = perturbation(poly, delta, seed_seq)
    L, s = word_isometry(pert.polyhedron, word)
    res = find_periodic(pert.polyhedron, word)
    shift = None
    if res.exists and base_point is not None and res.kind is PeriodicKind.UNIQUE_POINT:
        shift = float(np.linalg.norm(res.point - base_point))
    return SampleEvidence(
        index=index,
        max_displacement=pert.max_displacement,
        isometry_class=classify(s).tag.value,
        linear_identity=bool(np.abs(L - np.eye(3)).max() < IDENTITY_TOL),
        reflection_defect=reflection_defect(L) if len(word) % 2 else None,
        periodic_kind=res.kind.value,
        diagnostic=res.diagnostic,
        witness_shift=shift,
    )


def stability_classify(
    poly: Polyhedron,
    word: str | Sequence[str],
    n_samples: int = 50,
    delta: float = 1e-3,
    seed: int | None = 0,
    workers: int | None = 1,
) -> StabilityReport:
    """Decide stability of a periodic ``word`` and gather sampled evidence.

    Args:
        n_samples: number of random perturbations to evaluate.
        delta: maximal vertex displacement.
        seed: master seed; every sample gets its own spawned stream.
        workers: processes for the sampling loop (1 runs inline).

    Raises:
        PreconditionError: if ``word`` does not code a periodic orbit of ``poly``.
    """
    word = validate_word(poly, word)
    base = find_periodic(poly, word)
    if not base.exists:
        raise PreconditionError(
            f"{format_word(word)} is not periodic in this polyhedron ({base.kind.value}: {base.diagnostic})"
        )
    if n_samples < 0:
        raise PreconditionError("n_samples must be non-negative")
    L, _ = word_isometry(poly, word)
    base_point = base.point if base.kind is PeriodicKind.UNIQUE_POINT else None
    seeds = np.random.SeedSequence(seed).spawn(n_samples)
    jobs = [(i, poly, word, delta, sq, base_point) for i, sq in enumerate(seeds)]
    if workers is not None and workers > 1 and n_samples > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = tuple(pool.map(_evaluate_sample, jobs))
    else:
        samples = tuple(_evaluate_sample(j) for j in jobs)

    caveat = None
    if len(word) % 2 == 0:
        if np.abs(L - np.eye(3)).max() < IDENTITY_TOL:
            verdict, rule = Verdict.UNSTABLE, StabilityRule.EVEN_S_IDENTITY
        else:
            verdict, rule = Verdict.STABLE, StabilityRule.EVEN_S_NOT_IDENTITY
    elif any(s.reflection_defect > REFLECTION_DEFECT_TOL for s in samples):
        verdict, rule = Verdict.UNSTABLE, StabilityRule.ODD_S_NONCONSTANT_SAMPLED
    else:
        verdict, rule = Verdict.INDETERMINATE, StabilityRule.ODD_S_CONSTANT_SAMPLED
        caveat = ODD_CAVEAT

    ratios = [
        s.witness_shift / s.max_displacement
        for s in samples
        if s.witness_shift is not None and s.max_displacement > 0
    ]
    return StabilityReport(
        word=word,
        verdict=verdict,
        rule=rule,
        n_samples=n_samples,
        delta=delta,
        seed=seed,
        caveat=caveat,
        samples=samples,
        continuity_constant=max(ratios) if ratios else None,
        base={"kind": base.kind.value, "point": [float(x) for x in base.point]},
    )


# -- right prisms ---------------------------------------------------------------
@dataclass(frozen=True)
class ProjectionCheck:
    """Projection of a prism word onto the base polygon.

    ``edges`` maps each side face to the pair of bottom-cap vertex indices it
    stands on. ``unstable`` is True when the projected polygon word is already
    unstable, which makes the prism word unstable too.
    """

    caps: tuple[str, str]
    projected: Word
    edges: dict
    unstable: bool
    reason: str

    def to_dict(self) -> dict:
        return {
            "caps": list(self.caps),
            "projected": format_word(self.projected),
            "edges": {k: list(v) for k, v in self.edges.items()},
            "unstable": self.unstable,
            "reason": self.reason,
        }


def _is_right_prism(poly: Polyhedron, bottom: str, top: str, tol: float = 1e-9) -> bool:
    nb, nt = poly.plane(bottom).normal, poly.plane(top).normal
    if nb @ nt > -1.0 + tol:
        return False
    fb, ft = poly.face(bottom), poly.face(top)
    if len(fb.vertices) != len(ft.vertices) or len(fb.vertices) + len(ft.vertices) != len(poly.vertices):
        return False
    if len(poly.faces) != len(fb.vertices) + 2:
        return False
    for f in poly.faces:
        if f.label in (bottom, top):
            continue
        if abs(poly.plane(f.label).normal @ nb) > tol:
            return False
    height = poly.plane(top).offset + poly.plane(bottom).offset
    shifted = poly.vertices[list(fb.vertices)] + height * nt
    tops = poly.vertices[list(ft.vertices)]
    dist = np.linalg.norm(shifted[:, None, :] - tops[None, :, :], axis=2)
    return bool(np.all(dist.min(axis=1) < 1e-7))


def find_caps(poly: Polyhedron) -> tuple[str, str]:
    """The (bottom, top) cap labels of a right prism.

    Raises:
        PreconditionError: if ``poly`` is not a right prism.
    """
    for bottom, top in itertools.permutations(poly.labels, 2):
        if _is_right_prism(poly, bottom, top):
            return bottom, top
    raise PreconditionError("polyhedron is not a right prism")


def prism_projection_check(
    prism: Polyhedron, word: str | Sequence[str], caps: tuple[str, str] | None = None
) -> ProjectionCheck:
    """Drop cap letters from ``word`` and test the polygon word that remains.

    For a polygon, an odd periodic word is stable, and an even one is stable
    exactly when every edge occurs equally often at even and odd positions.
    An empty projection (bouncing between the caps) is unstable.
    """
    word = validate_word(prism, word)
    if caps is None:
        caps = find_caps(prism)
    elif not _is_right_prism(prism, *caps):
        raise PreconditionError(f"faces {caps} are not the caps of a right prism")
    bottom_idx = set(prism.face(caps[0]).vertices)
    edges = {
        f.label: tuple(i for i in f.vertices if i in bottom_idx)
        for f in prism.faces
        if f.label not in caps
    }
    projected = tuple(x for x in word if x not in caps)
    if not projected:
        return ProjectionCheck(tuple(caps), projected, edges, True, "projection is empty")
    if len(projected) % 2:
        return ProjectionCheck(tuple(caps), projected, edges, False, "odd projected word")
    balance = {lab: 0 for lab in edges}
    for i, lab in enumerate(projected):
        balance[lab] += 1 if i % 2 == 0 else -1
    off = sorted(lab for lab, b in balance.items() if b != 0)
    if off:
        return ProjectionCheck(
            tuple(caps), projected, edges, True, f"edges {off} are unbalanced between even and odd positions"
        )
    return ProjectionCheck(tuple(caps), projected, edges, False, "even projected word with balanced edges")
