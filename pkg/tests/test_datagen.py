import json
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ringmix.ci import Epsilon, check_cik_fast
from ringmix.datagen import (
    RealParams, SyntheticParams, bundled_trace, gen_real_shaped, gen_synthetic, history_trace,
    instance_from_dict, instance_to_dict, load_instance, monero_shaped_trace, params_from_dict,
    pr_min_from_ci, save_instance,
)
from ringmix.errors import PreconditionError
from ringmix.framework import build_batches
from ringmix.modules import FRESH_COIN, SUPER_RS, extract_modules, union_diversity


def test_synthetic_defaults():
    inst = gen_synthetic(SyntheticParams(seed=42))
    assert len(inst.modules) == 50
    assert 50 * 14 <= sum(m.size for m in inst.modules) <= 50 * 18
    assert all(1 <= m.degree <= 9 for m in inst.modules)
    assert all(Fraction(1, 10) <= m.pr_max <= Fraction(1, 2) for m in inst.modules)
    assert len({t for m in inst.modules for t in m.txs}) <= 70


def test_single_source_transaction():
    inst = gen_synthetic(SyntheticParams(o=1, seed=3))
    assert all(m.dive == 1 for m in inst.modules)
    assert union_diversity(inst.modules) == 1


def test_synthetic_is_deterministic():
    a = instance_to_dict(gen_synthetic(SyntheticParams(seed=9)))
    b = instance_to_dict(gen_synthetic(SyntheticParams(seed=9)))
    c = instance_to_dict(gen_synthetic(SyntheticParams(seed=10)))
    assert a == b and a != c


def test_real_shaped_instance():
    inst = gen_real_shaped(bundled_trace(), RealParams(seed=1))
    rings = [m for m in inst.modules if m.kind == SUPER_RS]
    fresh = [m for m in inst.modules if m.kind == FRESH_COIN]
    assert len(rings) == 57 and all(m.size == 11 for m in rings)
    assert len(fresh) == 633 - 627 == 6


def test_degree_range_one_warns():
    with pytest.warns(UserWarning):
        SyntheticParams(degree_range=(1, 1))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        SyntheticParams(degree_range=(1, 2))


@pytest.mark.parametrize("kw", [
    {"degree_range": (0, 3)}, {"degree_range": (4, 3)}, {"pr_max_range": (0.2, 1.5)},
    {"epsilon": -1.0}, {"n": 0}, {"size_range": (5, 4)}, {"degree_range": (20, 30)},
])
def test_bad_synthetic_params(kw):
    with pytest.raises(ValueError):
        SyntheticParams(**kw)


def test_params_from_mapping():
    p = params_from_dict(SyntheticParams, {"n": 5, "degree_range": [1, 3]})
    assert p.n == 5 and p.degree_range == (1, 3)
    with pytest.raises(ValueError):
        params_from_dict(RealParams, {"n": 5})


def test_pr_min_examples():
    assert pr_min_from_ci(0, 1, 0) == 0
    assert pr_min_from_ci(Fraction(1, 2), 3, Epsilon.from_ratio(2)) == Fraction(1, 4)
    assert pr_min_from_ci(Fraction(1, 10), 2, 8.0) == 0


@settings(max_examples=300, deadline=None)
@given(st.fractions(0, 1, max_denominator=40), st.integers(1, 12), st.fractions(1, 30, max_denominator=9))
def test_pr_min_sits_on_the_ci_boundary(pr_max, degree, ratio):
    eps = Epsilon.from_ratio(ratio)
    pr_min = pr_min_from_ci(pr_max, degree, eps)
    assert 0 <= pr_min
    lhs = ratio * (1 - pr_max) / ((degree - 1) * pr_max + 1)
    rhs = (1 - pr_min) / ((degree - 1) * pr_min + 1)
    if pr_min > 0:
        assert lhs == rhs
    else:
        assert lhs >= rhs
    if pr_min <= pr_max:
        assert check_cik_fast(pr_max, pr_min, degree, eps)


def test_bundled_trace_matches_its_generator():
    assert bundled_trace() == monero_shaped_trace()
    sizes = [len(b.coin_ids()) for b in bundled_trace().blocks]
    assert max(sizes) == 77 and min(sizes) == 1


def test_history_trace_reproduces_the_modules():
    inst = gen_synthetic(SyntheticParams(n=6, size_range=(3, 5), degree_range=(1, 3), seed=4))
    trace = history_trace(inst)
    (batch,) = build_batches(trace, len(trace.coins))
    mods = {m.module_id: m for m in extract_modules(batch.rs_set, batch.universe, batch.coin_tx)}
    for m in inst.modules:
        if m.ns == 0:
            # no ring covers it, so its coins come back as fresh modules
            assert all(mods[c].kind == FRESH_COIN for c in m.coins)
            continue
        got = mods[m.module_id]
        assert (got.coins, got.txs, got.degree) == (m.coins, m.txs, m.degree)


def test_instance_file_round_trip(tmp_path):
    inst = gen_real_shaped(bundled_trace(), RealParams(seed=2))
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    back = load_instance(path)
    assert instance_to_dict(back) == instance_to_dict(inst)
    assert back.epsilon == inst.epsilon


def test_exact_epsilon_survives_serialization():
    inst = gen_synthetic(SyntheticParams(n=3, seed=1))
    doc = instance_to_dict(inst)
    doc["epsilon"] = "ln(8/3)"
    assert instance_to_dict(instance_from_dict(doc))["epsilon"] == "ln(8/3)"


def test_tampered_instance_is_rejected(tmp_path):
    doc = instance_to_dict(gen_synthetic(SyntheticParams(n=3, seed=1)))
    doc["o_max"] += 1
    with pytest.raises(PreconditionError):
        instance_from_dict(doc)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"modules": []}))
    with pytest.raises(PreconditionError):
        load_instance(bad)
