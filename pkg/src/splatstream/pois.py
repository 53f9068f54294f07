"""Semantic Points of Interest and per-class visibility layers.

The built-in hazard classes are Fire, Smoke, Debris, Victim and
AccessRoute; anything else rides along as Other("label"), so the class
universe stays open.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

BUILTIN_CLASSES = ("Fire", "Smoke", "Debris", "Victim", "AccessRoute")

# Marker colors for rendering, one RGB per built-in class.
CLASS_COLORS = {
    "Fire": (1.0, 0.2, 0.0),
    "Smoke": (0.6, 0.6, 0.6),
    "Debris": (0.7, 0.5, 0.2),
    "Victim": (1.0, 0.0, 1.0),
    "AccessRoute": (0.0, 0.8, 0.2),
}
OTHER_COLOR = (0.2, 0.4, 1.0)


def normalize_class(name: str) -> str:
    """Map an arbitrary class label onto the universe: built-ins keep
    their name, everything else is an Other label (the string itself)."""
    return name


@dataclass(frozen=True)
class Poi:
    id: str
    hazard_class: str
    position: tuple            # (x, y, z) scene units
    label: str = ""
    updated_at: int = 0        # ms since epoch

    def validate(self):
        if not self.id:
            raise ValueError("poi id must be non-empty")
        if len(self.position) != 3 or not all(math.isfinite(c) for c in self.position):
            raise ValueError("poi position must be 3 finite coordinates")

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "class": self.hazard_class,
            "label": self.label,
            "position": list(self.position),
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Poi":
        poi = cls(
            id=str(doc["id"]),
            hazard_class=normalize_class(str(doc["class"])),
            position=tuple(float(c) for c in doc["position"]),
            label=str(doc.get("label", "")),
            updated_at=int(doc.get("updated_at") or time.time() * 1000),
        )
        poi.validate()
        return poi


@dataclass(frozen=True)
class LayerState:
    enabled: frozenset = frozenset(BUILTIN_CLASSES)

    def with_class(self, name: str, on: bool) -> "LayerState":
        s = set(self.enabled)
        if on:
            s.add(name)
        else:
            s.discard(name)
        return LayerState(frozenset(s))


def filter_pois(pois, layers: LayerState):
    """POIs whose class is enabled, original order preserved."""
    return [p for p in pois if p.hazard_class in layers.enabled]


@dataclass
class PoiSet:
    """Ordered POI collection with a revision counter bumped on change."""

    pois: list = field(default_factory=list)
    revision: int = 0

    def get(self, poi_id: str):
        for p in self.pois:
            if p.id == poi_id:
                return p
        return None

    def upsert(self, poi: Poi) -> "PoiSet":
        poi.validate()
        out = list(self.pois)
        for i, p in enumerate(out):
            if p.id == poi.id:
                out[i] = poi
                break
        else:
            out.append(poi)
        return PoiSet(out, self.revision + 1)

    def remove(self, poi_id: str) -> "PoiSet":
        out = [p for p in self.pois if p.id != poi_id]
        if len(out) == len(self.pois):
            return self                       # no-op: revision unchanged
        return PoiSet(out, self.revision + 1)

    def to_docs(self) -> list:
        return [p.to_doc() for p in self.pois]

    @classmethod
    def from_docs(cls, docs, revision: int = 0) -> "PoiSet":
        return cls([Poi.from_doc(d) for d in docs], revision)
