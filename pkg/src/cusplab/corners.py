"""Exact combinatorics of manifolds with corners.

Index sets with logarithmic weights, b-maps recorded as exponent matrices
over boundary hypersurfaces, blow-up density bookkeeping, and the
index-family arithmetic of pull-back along interior b-maps and push-forward
along b-fibrations.

Everything in this module is exact: exponents are ``fractions.Fraction``,
values are immutable after construction, and every operation is a pure
function, so objects can be shared freely between concurrent tasks.

Conventions:

* An index set is generated by finitely many terms ``(z, k)``; membership is
  closed under ``z -> z + 1`` and downward in the log power ``k``.
* The empty index set (written ``infinity`` in the glossary) is
  ``IndexSet.empty()``; an absent face in an :class:`IndexFamily` means the
  empty set.
* Exponent matrices hold natural numbers; ``e(G, H) > 0`` means the source
  face ``G`` is carried into the target face ``H`` with that order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

RationalLike = Union[int, str, Fraction]


def _frac(x: RationalLike) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class SpaceMismatchError(ValueError):
    """Composition or family application across unrelated spaces."""


class NotBFibrationError(ValueError):
    """Push-forward requested along a map that is not a b-fibration."""


class IntegrabilityViolatedError(ValueError):
    """A face mapped to the interior carries an index set with inf <= 0."""

    def __init__(self, face: "Face", inf_value) -> None:
        self.face = face
        self.inf_value = inf_value
        super().__init__(
            f"face {face.label!r} maps to the interior but has inf order {inf_value}"
        )


class DanglingInheritanceError(ValueError):
    """A blow-up step inherits from a face no earlier step created."""


# ---------------------------------------------------------------------------
# Faces and spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Face:
    """A boundary hypersurface, identified by an opaque id."""

    id: str
    label: str = ""

    def __post_init__(self) -> None:
        if not self.label:
            object.__setattr__(self, "label", self.id)


@dataclass(frozen=True)
class Space:
    """The combinatorial shadow of a manifold with corners: its named faces."""

    faces: tuple[Face, ...]

    def __post_init__(self) -> None:
        if not self.faces:
            raise ValueError("a space needs at least one face")
        ids = [f.id for f in self.faces]
        labels = [f.label for f in self.faces]
        if len(set(ids)) != len(ids) or len(set(labels)) != len(labels):
            raise ValueError(f"duplicate face ids/labels in {labels}")

    @classmethod
    def of(cls, *labels: str) -> "Space":
        return cls(tuple(Face(lbl) for lbl in labels))

    def face(self, label: str) -> Face:
        for f in self.faces:
            if f.label == label:
                return f
        raise KeyError(f"no face labelled {label!r}")

    def __contains__(self, face: Face) -> bool:
        return face in self.faces


# ---------------------------------------------------------------------------
# Index sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class IndexTerm:
    """One generator ``(z, k)``: exponent z, log power k."""

    z: Fraction
    k: int

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError("log power must be a natural number")
        object.__setattr__(self, "z", _frac(self.z))


def _dominates(a: IndexTerm, b: IndexTerm) -> bool:
    """True if b lies in the closure generated by a (so b is redundant)."""
    d = b.z - a.z
    return d.denominator == 1 and d >= 0 and b.k <= a.k


@dataclass(frozen=True)
class IndexSet:
    """A polyhomogeneous index set, kept in canonical generator form.

    Membership: ``(z, k)`` belongs to the set iff some generator ``(z0, k0)``
    has ``z - z0`` a natural number and ``k <= k0``.  Canonical form sorts
    generators lexicographically and prunes any generator dominated by
    another, so structural equality is semantic equality.
    """

    generators: tuple[IndexTerm, ...] = ()

    def __post_init__(self) -> None:
        terms = sorted(set(self.generators))
        kept = [
            t
            for i, t in enumerate(terms)
            if not any(i != j and _dominates(u, t) for j, u in enumerate(terms))
        ]
        object.__setattr__(self, "generators", tuple(kept))

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[RationalLike, int]]) -> "IndexSet":
        return cls(tuple(IndexTerm(_frac(z), k) for z, k in terms))

    @classmethod
    def empty(cls) -> "IndexSet":
        return cls(())

    @classmethod
    def naturals(cls) -> "IndexSet":
        """The smooth index set 0 = {(n, 0) : n natural}."""
        return cls.from_terms([(0, 0)])

    @classmethod
    def shifted(cls, z: RationalLike) -> "IndexSet":
        """The set z + naturals."""
        return cls.from_terms([(z, 0)])

    @property
    def is_empty(self) -> bool:
        return not self.generators

    def __repr__(self) -> str:
        if self.is_empty:
            return "IndexSet(empty)"
        inner = ", ".join(f"({t.z},{t.k})" for t in self.generators)
        return f"IndexSet[{inner}]"


def member(E: IndexSet, z: RationalLike, k: int) -> bool:
    """Whether (z, k) lies in the closure of E's generators."""
    if k < 0:
        return False
    zq = _frac(z)
    return any(_dominates(g, IndexTerm(zq, k)) for g in E.generators)


def inf_order(E: IndexSet):
    """Minimal exponent of E, or +inf for the empty set."""
    if E.is_empty:
        return math.inf
    return min(g.z for g in E.generators)


def sum_sets(E: IndexSet, F: IndexSet) -> IndexSet:
    """Minkowski sum of exponents with additive log powers; empty absorbs."""
    if E.is_empty or F.is_empty:
        return IndexSet.empty()
    return IndexSet(
        tuple(IndexTerm(a.z + b.z, a.k + b.k) for a in E.generators for b in F.generators)
    )


def scale_set(q: RationalLike, E: IndexSet) -> IndexSet:
    """Multiply exponents by q > 0, keeping log powers and the +1 shift closure."""
    qf = _frac(q)
    if qf <= 0:
        raise ValueError(f"scale factor must be positive, got {qf}")
    return IndexSet(tuple(IndexTerm(qf * g.z, g.k) for g in E.generators))


def shift_set(E: IndexSet, d: RationalLike) -> IndexSet:
    """Add d to every exponent (the effect of a density factor rho^d)."""
    return IndexSet(tuple(IndexTerm(g.z + _frac(d), g.k) for g in E.generators))


def extended_union(E: IndexSet, F: IndexSet) -> IndexSet:
    """E union F plus log-bumped overlap terms.

    On generators: whenever generators (z, k) of E and (w, l) of F have
    z - w an integer, the term (max(z, w), k + l + 1) is added.
    """
    extra = [
        IndexTerm(max(a.z, b.z), a.k + b.k + 1)
        for a in E.generators
        for b in F.generators
        if (a.z - b.z).denominator == 1
    ]
    return IndexSet(E.generators + F.generators + tuple(extra))


# ---------------------------------------------------------------------------
# Index families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndexFamily:
    """An index set per face of a space; absent faces mean the empty set."""

    space: Space
    entries: tuple[tuple[Face, IndexSet], ...] = ()

    def __post_init__(self) -> None:
        seen: dict[Face, IndexSet] = {}
        for face, E in self.entries:
            if face not in self.space:
                raise SpaceMismatchError(f"face {face.label!r} not in the family's space")
            if face in seen:
                raise ValueError(f"duplicate entry for face {face.label!r}")
            seen[face] = E
        canon = tuple(
            (f, seen[f]) for f in self.space.faces if f in seen and not seen[f].is_empty
        )
        object.__setattr__(self, "entries", canon)

    @classmethod
    def on(cls, space: Space, sets: Mapping[str, IndexSet]) -> "IndexFamily":
        return cls(space, tuple((space.face(lbl), E) for lbl, E in sets.items()))

    def get(self, face: Face) -> IndexSet:
        for f, E in self.entries:
            if f == face:
                return E
        if face not in self.space:
            raise SpaceMismatchError(f"face {face.label!r} not in the family's space")
        return IndexSet.empty()

    def as_dict(self) -> dict[str, IndexSet]:
        return {f.label: E for f, E in self.entries}

    def shifted(self, exponents: Mapping[str, int]) -> "IndexFamily":
        """Shift each face's nonempty set by the given density exponent."""
        out = {
            f.label: shift_set(E, exponents.get(f.label, 0)) for f, E in self.entries
        }
        return IndexFamily.on(self.space, out)


# ---------------------------------------------------------------------------
# b-maps as exponent matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BMap:
    """A b-map recorded combinatorially.

    ``e[(G, H)]`` is the exponent of the source face G in the pull-back of
    the defining function of the target face H.  ``image_in`` lists target
    faces whose defining function pulls back to zero (the map is interior
    iff this is empty).  Whether the map is a b-submersion cannot be read
    off the matrix, so it is a declared witness.
    """

    source: Space
    target: Space
    e: tuple[tuple[tuple[Face, Face], int], ...]
    image_in: frozenset[Face] = frozenset()
    submersion_witness: bool = True

    def __post_init__(self) -> None:
        for (G, H), val in self.e:
            if G not in self.source or H not in self.target:
                raise SpaceMismatchError(f"entry ({G.label},{H.label}) off the spaces")
            if not isinstance(val, int) or val < 0:
                raise ValueError("exponents must be natural numbers")
        for H in self.image_in:
            if H not in self.target:
                raise SpaceMismatchError(f"image face {H.label!r} not in target")
        canon = tuple(
            sorted((((G, H), v) for (G, H), v in self.e if v > 0))
        )
        object.__setattr__(self, "e", canon)

    @classmethod
    def build(
        cls,
        source: Space,
        target: Space,
        rows: Mapping[str, Mapping[str, int]],
        image_in: Sequence[str] = (),
        submersion_witness: bool = True,
    ) -> "BMap":
        entries = tuple(
            ((source.face(g), target.face(h)), v)
            for g, row in rows.items()
            for h, v in row.items()
        )
        return cls(
            source,
            target,
            entries,
            frozenset(target.face(h) for h in image_in),
            submersion_witness,
        )

    @property
    def interior(self) -> bool:
        return not self.image_in

    def exponent(self, G: Face, H: Face) -> int:
        for (g, h), v in self.e:
            if g == G and h == H:
                return v
        return 0

    def row(self, G: Face) -> dict[Face, int]:
        return {h: v for (g, h), v in self.e if g == G}

    def column(self, H: Face) -> dict[Face, int]:
        return {g: v for (g, h), v in self.e if h == H}


def is_b_normal(f: BMap) -> bool:
    """Each source face meets at most one target defining function."""
    return all(len(f.row(G)) <= 1 for G in f.source.faces)


def is_b_fibration(f: BMap) -> bool:
    return f.interior and is_b_normal(f) and f.submersion_witness


def compose_bmaps(f: BMap, g: BMap) -> BMap:
    """The b-map of g after f; exponent matrices multiply."""
    if f.target != g.source:
        raise SpaceMismatchError("intermediate spaces do not match")
    if not (f.interior and g.interior):
        raise ValueError("composition implemented for interior b-maps only")
    entries = []
    for G in f.source.faces:
        frow = f.row(G)
        for K in g.target.faces:
            val = sum(v * g.exponent(H, K) for H, v in frow.items())
            if val:
                entries.append(((G, K), val))
    return BMap(
        f.source,
        g.target,
        tuple(entries),
        frozenset(),
        f.submersion_witness and g.submersion_witness,
    )


def pullback_family(f: BMap, fam: IndexFamily) -> IndexFamily:
    """Pull an index family on the target back along an interior b-map.

    The source face G receives the sum over target faces H of
    ``e(G, H) * fam(H)``; an empty sum of terms is the smooth set, while any
    empty summand makes the result empty.
    """
    if not f.interior:
        raise ValueError("pull-back requires an interior b-map")
    if fam.space != f.target:
        raise SpaceMismatchError("family lives on the wrong space")
    out: dict[str, IndexSet] = {}
    for G in f.source.faces:
        acc = IndexSet.naturals()
        for H, exp in f.row(G).items():
            acc = sum_sets(acc, scale_set(exp, fam.get(H)))
        out[G.label] = acc
    return IndexFamily.on(f.source, out)


def pushforward_family(f: BMap, fam: IndexFamily) -> IndexFamily:
    """Push an index family on the source forward along a b-fibration.

    The target face H receives the extended union over source faces G with
    ``e(G, H) > 0`` of ``(1 / e(G, H)) * fam(G)``.  Faces with an all-zero
    row map to the interior and must carry positive inf order.
    """
    if not is_b_fibration(f):
        raise NotBFibrationError("push-forward requires a b-fibration")
    if fam.space != f.source:
        raise SpaceMismatchError("family lives on the wrong space")
    for G in f.source.faces:
        if not f.row(G):
            inf_g = inf_order(fam.get(G))
            if not inf_g > 0:
                raise IntegrabilityViolatedError(G, inf_g)
    out: dict[str, IndexSet] = {}
    for H in f.target.faces:
        acc = IndexSet.empty()
        for G, exp in f.column(H).items():
            acc = extended_union(acc, scale_set(Fraction(1, exp), fam.get(G)))
        out[H.label] = acc
    return IndexFamily.on(f.target, out)


# ---------------------------------------------------------------------------
# Blow-up density bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlowupStep:
    """One blow-up with local model [R^n_k ; {0}].

    ``inherits_from`` lists earlier front faces whose defining functions pick
    up a factor of the new face's defining function under the lift (i.e. the
    centre of this blow-up sits inside those faces).
    """

    n: int
    k: int
    new_face: Face
    inherits_from: frozenset[Face] = frozenset()

    def __post_init__(self) -> None:
        if not 0 <= self.k <= self.n:
            raise ValueError("need 0 <= k <= n in the local model")


def density_lift_exponent(step: BlowupStep) -> int:
    """Power of the new front face's defining function on a lifted b-density."""
    return step.n - step.k


def chained_density_exponents(steps: Sequence[BlowupStep]) -> dict[Face, int]:
    """Accumulated b-density exponents along an iterated blow-up.

    Each new face starts with its own n - k and additionally absorbs the
    already-accumulated exponent of every face it inherits from.
    """
    acc: dict[Face, int] = {}
    for step in steps:
        extra = 0
        for owner in sorted(step.inherits_from):
            if owner not in acc:
                raise DanglingInheritanceError(
                    f"step {step.new_face.label!r} inherits from unknown face {owner.label!r}"
                )
            extra += acc[owner]
        acc[step.new_face] = density_lift_exponent(step) + extra
    return acc


class BlowupRelation(enum.Enum):
    """How two cleanly intersecting blow-up centres sit relative to each other."""

    TRANSVERSAL = "transversal"
    Y_INSIDE_Z = "y_inside_z"
    Z_INSIDE_Y = "z_inside_y"
    CLEAN_ONLY = "clean_only"


def commute_blowups(relation: BlowupRelation) -> bool:
    """Whether the two blow-ups may be performed in either order."""
    return relation is not BlowupRelation.CLEAN_ONLY
