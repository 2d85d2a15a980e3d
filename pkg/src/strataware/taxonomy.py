"""Feature taxonomies: names, kinds, and directional constraints.

A taxonomy fixes the column order of every feature matrix in the package
and sorts features into three kinds:

- improvable:   changing the feature changes the underlying label odds
  (study hours, savings rate);
- manipulable:  the feature can be gamed without changing the underlying
  label odds (word count of an essay);
- immutable:    the feature cannot be changed at all (age).

Improvable and manipulable features together form the *actionable* set.
Single-letter family codes select which features a decision subject may
move: "I" (improvable only), "M" (manipulable only), "A" (all actionable).

Each feature also carries a direction flag in {-1, 0, +1} naming a
prohibited direction of change: +1 means the feature should not be
increased by an adaptation, -1 means it should not be decreased, 0 means
no constraint. The flag only matters for training with a directional
penalty; the best response itself ignores it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .exceptions import DimensionMismatch, UnknownFeature


class FeatureKind(str, Enum):
    IMPROVABLE = "improvable"
    MANIPULABLE = "manipulable"
    IMMUTABLE = "immutable"


FAMILY_IMPROVABLE = "I"
FAMILY_MANIPULABLE = "M"
FAMILY_ACTIONABLE = "A"
FAMILIES = (FAMILY_IMPROVABLE, FAMILY_MANIPULABLE, FAMILY_ACTIONABLE)

_FAMILY_ALIASES = {
    "i": FAMILY_IMPROVABLE,
    "improvable": FAMILY_IMPROVABLE,
    "m": FAMILY_MANIPULABLE,
    "manipulable": FAMILY_MANIPULABLE,
    "a": FAMILY_ACTIONABLE,
    "actionable": FAMILY_ACTIONABLE,
}


def normalize_family(family: str) -> str:
    """Map a family spelling ("I", "manipulable", ...) to its canonical code."""
    try:
        return _FAMILY_ALIASES[str(family).strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown response family {family!r}; expected one of I, M, A"
        ) from None


def parse_kind(value: str | FeatureKind) -> FeatureKind:
    if isinstance(value, FeatureKind):
        return value
    try:
        return FeatureKind(str(value).strip().lower())
    except ValueError:
        valid = ", ".join(k.value for k in FeatureKind)
        raise ValueError(f"unknown feature kind {value!r}; expected one of {valid}") from None


@dataclass(frozen=True)
class Feature:
    """One column: its name, kind, and prohibited direction of change."""

    name: str
    kind: FeatureKind
    direction: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", parse_kind(self.kind))
        object.__setattr__(self, "direction", int(self.direction))
        if not self.name or not isinstance(self.name, str):
            raise ValueError("feature name must be a non-empty string")
        if self.direction not in (-1, 0, 1):
            raise ValueError(
                f"feature {self.name!r}: direction must be -1, 0, or +1, got {self.direction}"
            )
        if self.kind is FeatureKind.IMMUTABLE and self.direction != 0:
            raise ValueError(
                f"feature {self.name!r} is immutable; a direction constraint is meaningless"
            )


@dataclass(frozen=True)
class FeatureTaxonomy:
    """Ordered, validated collection of features."""

    features: tuple[Feature, ...]

    def __post_init__(self) -> None:
        feats = tuple(self.features)
        object.__setattr__(self, "features", feats)
        if not feats:
            raise ValueError("taxonomy must contain at least one feature")
        names = [f.name for f in feats]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate feature names: {dupes}")

    # -- shape ------------------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.features)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @cached_property
    def kinds(self) -> tuple[FeatureKind, ...]:
        return tuple(f.kind for f in self.features)

    @cached_property
    def directions(self) -> np.ndarray:
        out = np.array([f.direction for f in self.features], dtype=np.int64)
        out.flags.writeable = False
        return out

    def _indices_of(self, kind: FeatureKind) -> np.ndarray:
        out = np.array(
            [i for i, f in enumerate(self.features) if f.kind is kind], dtype=np.int64
        )
        out.flags.writeable = False
        return out

    @cached_property
    def improvable_indices(self) -> np.ndarray:
        return self._indices_of(FeatureKind.IMPROVABLE)

    @cached_property
    def manipulable_indices(self) -> np.ndarray:
        return self._indices_of(FeatureKind.MANIPULABLE)

    @cached_property
    def immutable_indices(self) -> np.ndarray:
        return self._indices_of(FeatureKind.IMMUTABLE)

    @cached_property
    def actionable_indices(self) -> np.ndarray:
        out = np.array(
            [i for i, f in enumerate(self.features) if f.kind is not FeatureKind.IMMUTABLE],
            dtype=np.int64,
        )
        out.flags.writeable = False
        return out

    def family_blocks(self, family: str) -> tuple[tuple[str, np.ndarray], ...]:
        """Cost blocks touched by a response family, as (block code, indices).

        Family "A" yields the improvable block then the manipulable block;
        block-diagonal cost structure means every family operation can work
        block by block.
        """
        fam = normalize_family(family)
        if fam == FAMILY_IMPROVABLE:
            return ((FAMILY_IMPROVABLE, self.improvable_indices),)
        if fam == FAMILY_MANIPULABLE:
            return ((FAMILY_MANIPULABLE, self.manipulable_indices),)
        return (
            (FAMILY_IMPROVABLE, self.improvable_indices),
            (FAMILY_MANIPULABLE, self.manipulable_indices),
        )

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownFeature(f"no feature named {name!r} in taxonomy") from None

    # -- derivation -------------------------------------------------------

    def with_kinds(self, swaps: Mapping[str, str | FeatureKind]) -> "FeatureTaxonomy":
        """New taxonomy with some features reassigned to different kinds.

        A feature made immutable loses its direction flag, keeping the
        immutable-implies-unconstrained invariant.
        """
        for name in swaps:
            self.index_of(name)
        new = []
        for f in self.features:
            if f.name in swaps:
                kind = parse_kind(swaps[f.name])
                direction = 0 if kind is FeatureKind.IMMUTABLE else f.direction
                new.append(Feature(f.name, kind, direction))
            else:
                new.append(f)
        return FeatureTaxonomy(tuple(new))

    def with_directions(self, directions: Mapping[str, int]) -> "FeatureTaxonomy":
        for name in directions:
            self.index_of(name)
        new = [
            Feature(f.name, f.kind, int(directions.get(f.name, f.direction)))
            for f in self.features
        ]
        return FeatureTaxonomy(tuple(new))

    # -- serialization ----------------------------------------------------

    def to_obj(self) -> list[dict]:
        return [
            {"name": f.name, "kind": f.kind.value, "direction": f.direction}
            for f in self.features
        ]

    @classmethod
    def from_obj(cls, obj: Iterable[Mapping]) -> "FeatureTaxonomy":
        if isinstance(obj, Mapping):
            raise ValueError("taxonomy JSON must be an array of feature objects")
        feats = []
        for entry in obj:
            try:
                name = entry["name"]
                kind = entry["kind"]
            except (KeyError, TypeError):
                raise ValueError(
                    f"taxonomy entry {entry!r} needs 'name' and 'kind' keys"
                ) from None
            feats.append(Feature(name, parse_kind(kind), int(entry.get("direction", 0))))
        return cls(tuple(feats))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_obj(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FeatureTaxonomy":
        return cls.from_obj(json.loads(Path(path).read_text()))

    def digest(self) -> str:
        """SHA-256 over the canonical JSON form; used to pin models to taxonomies."""
        canon = json.dumps(self.to_obj(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def make_taxonomy(
    names: Iterable[str],
    kinds: Iterable[str | FeatureKind],
    directions: Iterable[int] | None = None,
) -> FeatureTaxonomy:
    """Convenience constructor from parallel sequences."""
    names = list(names)
    kinds = list(kinds)
    dirs = list(directions) if directions is not None else [0] * len(names)
    if not (len(names) == len(kinds) == len(dirs)):
        raise DimensionMismatch("names, kinds, and directions must have equal length")
    return FeatureTaxonomy(
        tuple(Feature(n, parse_kind(k), int(r)) for n, k, r in zip(names, kinds, dirs))
    )


# -- array validation against a taxonomy ----------------------------------


def check_vector(x, taxonomy: FeatureTaxonomy) -> np.ndarray:
    """Coerce one feature vector to float64 of length taxonomy.d."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != taxonomy.d:
        raise DimensionMismatch(
            f"expected a feature vector of length {taxonomy.d}, got shape {arr.shape}"
        )
    return arr


def check_matrix(X, taxonomy: FeatureTaxonomy) -> np.ndarray:
    """Coerce a feature matrix to float64 with taxonomy.d columns."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != taxonomy.d:
        raise DimensionMismatch(
            f"expected a feature matrix with {taxonomy.d} columns, got shape {arr.shape}"
        )
    return arr
