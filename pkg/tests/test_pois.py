import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splatstream.pois import (
    BUILTIN_CLASSES,
    LayerState,
    Poi,
    PoiSet,
    filter_pois,
)


def poi(pid, cls, pos=(0.0, 0.0, 0.0), label=""):
    return Poi(id=pid, hazard_class=cls, position=pos, label=label, updated_at=1)


CLASS_NAMES = list(BUILTIN_CLASSES) + ["GasLeak", "Flood"]


class TestFilter:
    def test_paper_classes(self):
        pois = [poi("a", "Fire"), poi("b", "Smoke"), poi("c", "Debris")]
        out = filter_pois(pois, LayerState(frozenset({"Fire"})))
        assert [p.id for p in out] == ["a"]

    def test_full_universe_identity(self):
        pois = [poi("a", "Fire"), poi("b", "Smoke"), poi("x", "GasLeak")]
        layers = LayerState(frozenset(CLASS_NAMES))
        assert filter_pois(pois, layers) == pois

    def test_empty_layers_empty_result(self):
        pois = [poi("a", "Fire")]
        assert filter_pois(pois, LayerState(frozenset())) == []

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.sampled_from(CLASS_NAMES), max_size=60),
           st.sets(st.sampled_from(CLASS_NAMES)))
    def test_matches_membership_oracle(self, classes, enabled):
        pois = [poi(f"p{i}", c) for i, c in enumerate(classes)]
        layers = LayerState(frozenset(enabled))
        got = filter_pois(pois, layers)
        # brute-force per-element membership scan
        expect = []
        for p in pois:
            if p.hazard_class in enabled:
                expect.append(p)
        assert got == expect

    def test_thousand_random_pois(self, rng):
        classes = [CLASS_NAMES[i] for i in rng.integers(0, len(CLASS_NAMES), 1000)]
        pois = [poi(f"p{i}", c) for i, c in enumerate(classes)]
        enabled = {"Fire", "Victim", "Flood"}
        got = filter_pois(pois, LayerState(frozenset(enabled)))
        assert got == [p for p in pois if p.hazard_class in enabled]

    @given(st.lists(st.sampled_from(CLASS_NAMES), max_size=30),
           st.sets(st.sampled_from(CLASS_NAMES)))
    def test_idempotent(self, classes, enabled):
        pois = [poi(f"p{i}", c) for i, c in enumerate(classes)]
        layers = LayerState(frozenset(enabled))
        once = filter_pois(pois, layers)
        assert filter_pois(once, layers) == once

    def test_partition_property(self):
        pois = [poi(f"p{i}", CLASS_NAMES[i % len(CLASS_NAMES)]) for i in range(40)]
        parts = [filter_pois(pois, LayerState(frozenset({c})))
                 for c in CLASS_NAMES]
        flat = [p for part in parts for p in part]
        assert sorted(p.id for p in flat) == sorted(p.id for p in pois)
        ids = [p.id for p in flat]
        assert len(ids) == len(set(ids))  # pairwise disjoint


class TestPoiSet:
    def test_upsert_same_id_replaces(self):
        s = PoiSet().upsert(poi("p1", "Fire", label="old"))
        s = s.upsert(poi("p1", "Smoke", label="new"))
        assert len(s.pois) == 1
        assert s.get("p1").label == "new"
        assert s.get("p1").hazard_class == "Smoke"
        assert s.revision == 2

    def test_remove_absent_is_noop_without_revision_bump(self):
        s = PoiSet().upsert(poi("p1", "Fire"))
        rev = s.revision
        s2 = s.remove("missing")
        assert s2.pois == s.pois
        assert s2.revision == rev

    def test_remove_present(self):
        s = PoiSet().upsert(poi("p1", "Fire")).upsert(poi("p2", "Smoke"))
        s2 = s.remove("p1")
        assert [p.id for p in s2.pois] == ["p2"]
        assert s2.revision == s.revision + 1

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.booleans(), st.integers(0, 20),
                              st.sampled_from(CLASS_NAMES)),
                    min_size=1, max_size=100))
    def test_interleaved_ops_match_map_oracle(self, ops):
        s = PoiSet()
        oracle = {}
        for is_upsert, n, cls in ops:
            pid = f"p{n}"
            if is_upsert:
                s = s.upsert(poi(pid, cls))
                oracle[pid] = cls
            else:
                s = s.remove(pid)
                oracle.pop(pid, None)
        assert {p.id: p.hazard_class for p in s.pois} == oracle

    def test_validation(self):
        with pytest.raises(ValueError):
            Poi(id="", hazard_class="Fire", position=(0, 0, 0)).validate()
        with pytest.raises(ValueError):
            Poi(id="x", hazard_class="Fire",
                position=(float("nan"), 0, 0)).validate()

    def test_doc_roundtrip(self):
        p = poi("p1", "Fire", pos=(1.0, 2.0, 3.0), label="north flank")
        assert Poi.from_doc(p.to_doc()) == p


def test_layer_toggle():
    layers = LayerState()
    assert "Fire" in layers.enabled
    off = layers.with_class("Fire", False)
    assert "Fire" not in off.enabled
    assert "Fire" in off.with_class("Fire", True).enabled
