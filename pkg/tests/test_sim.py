import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alharness.core import Annotation, BoundingBox, SampleRef
from alharness.errors import EmptyTrainingSetError, SpecError
from alharness.sim import (
    DifficultyMix,
    PoolSpec,
    SimHyper,
    SimModel,
    generate_pool,
    infer_sim,
    skill_from_weight,
    train_sim,
    true_class_prob,
)
from alharness.sim.env import _two_level
from alharness.strategies import entropy_of
from oracles import entropy_oracle


class TestPool:
    def test_empty_pool_rejected(self):
        with pytest.raises(SpecError):
            PoolSpec(n=0, n_classes=5)

    def test_deterministic(self):
        spec = PoolSpec(n=2000, n_classes=5, seed=7)
        assert generate_pool(spec) == generate_pool(spec)
        assert generate_pool(spec)[1] != generate_pool(PoolSpec(n=2000, n_classes=5, seed=8))[1]

    def test_point_mass(self):
        spec = PoolSpec(n=300, n_classes=3, seed=1, difficulty_mix=DifficultyMix.from_dict({"kind": "point", "value": 0}))
        _, samples = generate_pool(spec)
        assert all(s.difficulty == 0.0 for s in samples)

    def test_sample_shape(self):
        catalog, samples = generate_pool(PoolSpec(n=50, n_classes=4, seed=2, test_size=10))
        assert catalog.size == 4
        assert [s.split for s in samples].count("test") == 10
        for s in samples:
            assert s.annotations and 0.0 <= s.difficulty <= 1.0
            assert all(a.box.within(s.width, s.height) for a in s.annotations)

    def test_default_mix_has_hard_fraction(self):
        _, samples = generate_pool(PoolSpec(n=2000, n_classes=5, seed=7))
        hard = sum(s.difficulty >= 0.7 for s in samples) / len(samples)
        assert abs(hard - 0.2) < 0.04

    @pytest.mark.parametrize("bad", [{"kind": "beta", "a": -1, "b": 1}, {"kind": "uniform", "low": 0.5, "high": 0.2},
                                     {"kind": "nope"}])
    def test_bad_mix(self, bad):
        with pytest.raises(SpecError):
            DifficultyMix.from_dict(bad)

    def test_spec_dict_alias(self):
        assert PoolSpec.from_dict({"n": 10, "C": 2}).n_classes == 2
        with pytest.raises(SpecError):
            PoolSpec.from_dict({"n": 10})


def sample(classes, d=0.5, sid="x"):
    anns = tuple(Annotation(BoundingBox(10 * i, 10, 10 * i + 30, 50), c) for i, c in enumerate(classes))
    return SampleRef(sid, "", 200, 100, anns, "train", d)


class TestTraining:
    def test_zero_weight(self):
        assert skill_from_weight(0.0, 0.05) == 0.0

    def test_closed_form(self):
        expected = 1 - math.exp(-1.0)
        assert expected == pytest.approx(0.63212, abs=1e-5)
        assert skill_from_weight(10.0, 0.1) == pytest.approx(expected, abs=1e-15)

    def test_limit_stays_below_one(self):
        values = [skill_from_weight(w, 0.05) for w in (1, 10, 100, 1e4, 1e9)]
        assert values == sorted(values) and all(v < 1.0 for v in values)

    def test_empty(self):
        with pytest.raises(EmptyTrainingSetError):
            train_sim([], 3)

    def test_weight_floor(self):
        # difficulty 0 still contributes w_min
        m = train_sim([sample([0], d=0.0)], 2, SimHyper(alpha=1.0))
        assert m.skills == (pytest.approx(1 - math.exp(-0.1)), 0.0)

    def test_class_counted_once_per_sample(self):
        m = train_sim([sample([1, 1, 1], d=0.5)], 2, SimHyper(alpha=1.0))
        assert m.skills[1] == pytest.approx(1 - math.exp(-0.5))

    @pytest.mark.invariant
    @given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(1e-4, 1))
    def test_monotone_in_weight(self, a, b, alpha):
        lo, hi = sorted((a, b))
        assert skill_from_weight(lo, alpha) <= skill_from_weight(hi, alpha)

    @pytest.mark.invariant
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.lists(st.integers(0, 3), min_size=1, max_size=3), st.floats(0, 1)),
                    min_size=1, max_size=15), st.data())
    def test_set_monotone(self, rows, data):
        pool = [sample(cs, d, f"p{i}") for i, (cs, d) in enumerate(rows)]
        subset = data.draw(st.lists(st.sampled_from(pool), min_size=1, unique_by=lambda s: s.sample_id))
        full = train_sim(pool, 4)
        part = train_sim(subset, 4)
        assert all(f >= p for f, p in zip(full.skills, part.skills))

    def test_model_id_stable(self):
        a = train_sim([sample([0])], 2, training_version="v0")
        b = SimModel.from_dict(a.to_dict())
        assert a == b and a.model_id == b.model_id and a.model_id.startswith("sim-")


class TestInference:
    def test_silent_model(self):
        m = SimModel((0.0, 0.0, 0.0), "v", SimHyper(lambda0=0.0))
        for i in range(20):
            assert infer_sim(m, sample([0, 1, 2], sid=f"s{i}"), (0, 0, f"s{i}")) == []

    def test_limit_distribution(self):
        q = true_class_prob(math.nextafter(1.0, 0.0), 0.0, 0.05, 5)
        assert q == 1 - 1e-6
        assert entropy_of(_two_level(q, 2, 5)) < 1e-4

    def test_fixed_key(self):
        m = SimModel((0.5, 0.6), "v")
        s = sample([0, 1], d=0.3)
        assert infer_sim(m, s, (1, 2, "x")) == infer_sim(m, s, (1, 2, "x"))
        assert infer_sim(m, s, (1, 2, "x"), "hflip") == infer_sim(m, s, (1, 2, "x"), "hflip")

    def test_views_are_mirrored_without_jitter(self):
        m = SimModel((0.7, 0.7), "v", SimHyper(sigma0=0.0))
        s = sample([0, 1], d=0.2)
        orig = infer_sim(m, s, (3, 1, "x"))
        flip = infer_sim(m, s, (3, 1, "x"), "hflip")
        assert [d.box.hflip(s.width) for d in orig] == [d.box for d in flip]
        assert [d.class_probs for d in orig] == [d.class_probs for d in flip]

    def test_boxes_inside_image(self):
        m = SimModel((0.3, 0.2), "v", SimHyper(sigma0=0.5, lambda0=3.0))
        for i in range(50):
            s = sample([0, 1], d=0.9, sid=f"s{i}")
            for view in ("orig", "hflip"):
                for det in infer_sim(m, s, (0, 0, s.sample_id), view):
                    assert det.box.within(s.width, s.height)

    @pytest.mark.invariant
    @given(st.floats(0, 1 - 1e-9), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5), st.integers(2, 20))
    def test_entropy_monotone_in_difficulty(self, skill, d1, d2, gamma, n_classes):
        lo, hi = sorted((d1, d2))
        q_lo = true_class_prob(skill, lo, gamma, n_classes)
        q_hi = true_class_prob(skill, hi, gamma, n_classes)
        assert q_hi <= q_lo
        assert entropy_oracle(_two_level(q_hi, 0, n_classes)) >= entropy_oracle(_two_level(q_lo, 0, n_classes)) - 1e-12
