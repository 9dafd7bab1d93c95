import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scripts.input_generation.mutation import MutationConfig
from scripts.input_generation.similarity import delta
from scripts.repair_loop.pairing import (FailOnly, PairConfig, PairPool,
                                         PairSet, augment_passing, build_pool,
                                         select_pairs)
from scripts.test_harness.models import OracleKind, Provenance

from conftest import case, hex_cases

hex_text = st.text(alphabet='-0xXfade', min_size=1, max_size=8)


def test_identical_inputs_pair_with_similarity_one():
    fail, passing = case('f', s='abc'), case('p', s='abc')
    pool = build_pool([fail], [passing], PairConfig(theta=0.5, k=2))
    assert len(pool) == 1
    assert pool[0].sim == 1.0


def test_hexparse_pool_order():
    fail, neg, lower = hex_cases()
    pool = build_pool([fail], [lower, neg], PairConfig(theta=0.5, k=2))
    assert [pair.passing.id for pair in pool] == ['t_pass_neghex', 't_pass_lowerhex']
    assert pool[0].sim == pytest.approx(12 / 13)
    assert pool[1].sim == pytest.approx(11 / 13)


def test_threshold_is_strict():
    fail = case('f', s='abcd')
    # '{s:abcd}' vs '{s:wxyz}': 4 edits over 8 characters
    half = case('p1', s='wxyz')
    close = case('p2', s='abcz')
    pool = build_pool([fail], [half, close], PairConfig(theta=0.5, k=2))
    assert [pair.passing.id for pair in pool] == ['p2']


@settings(deadline=None)
@given(st.lists(hex_text, min_size=1, max_size=4), st.lists(hex_text, min_size=1, max_size=4),
       st.sampled_from([0.3, 0.5, 0.7]))
def test_pool_admits_exactly_the_similar_pairs(fail_texts, pass_texts, theta):
    fails = [case(f'f{i}', s=text) for i, text in enumerate(fail_texts)]
    passes = [case(f'p{i}', s=text) for i, text in enumerate(pass_texts)]
    pool = build_pool(fails, passes, PairConfig(theta=theta, k=2))
    assert all(pair.sim > theta for pair in pool)
    expected = {(f.id, p.id) for f in fails for p in passes if delta(f, p) > theta}
    assert {pair.key for pair in pool} == expected


def four_pairs():
    fails = [case('f', s='abcd')]
    passes = [case(f'p{i}', s=text) for i, text in enumerate(('abce', 'abxd', 'bacd', 'abcdd'))]
    return build_pool(fails, passes, PairConfig(theta=0.5, k=1))


def test_selection_visits_every_pair_before_repeating():
    pool = four_pairs()
    chosen = [select_pairs(pool, 1).pairs[0].key for _ in range(4)]
    assert len(set(chosen)) == 4


def test_selection_stays_balanced():
    pool = four_pairs()
    for _ in range(100):
        select_pairs(pool, 1)
    counts = [pair.times_selected for pair in pool]
    assert max(counts) - min(counts) <= 1
    assert sum(counts) == 100


def test_selection_is_deterministic():
    first, second = four_pairs(), four_pairs()
    assert [select_pairs(first, 2).pairs[0].key for _ in range(6)] == \
           [select_pairs(second, 2).pairs[0].key for _ in range(6)]


def test_single_pair_pool_with_larger_k():
    pool = build_pool([case('f', s='ab')], [case('p', s='ab')], PairConfig(theta=0.5, k=2))
    feedback = select_pairs(pool, 2)
    assert isinstance(feedback, PairSet)
    assert len(feedback.pairs) == 1


def test_empty_pool_falls_back_to_failing_tests():
    fail, _, _ = hex_cases()
    feedback = select_pairs([], 2, [fail, fail])
    assert isinstance(feedback, FailOnly)
    assert feedback.failing_cases == (fail,)
    with pytest.raises(ValueError):
        FailOnly(())


def test_counters_survive_rebuilds():
    fails = [case('f', s='abcd')]
    passes = [case(f'p{i}', s=text) for i, text in enumerate(('abce', 'abxd', 'bacd'))]
    pool = PairPool(PairConfig(theta=0.5, k=1))
    picked = []
    for _ in range(3):
        pool.rebuild(fails, passes)
        picked.append(pool.select().pairs[0].key)
    assert len(set(picked)) == 3
    assert set(pool.counters.values()) == {1}


def test_pair_config_validation():
    with pytest.raises(ValueError):
        PairConfig(theta=1.0)
    with pytest.raises(ValueError):
        PairConfig(k=0)
    with pytest.raises(ValueError):
        PairConfig(selection='greedy')


def test_random_selection_is_seeded_and_ignores_similarity():
    fails = [case('f', s='abcd')]
    passes = [case(f'p{i}', s=text) for i, text in enumerate(('abce', 'abxd', 'bacd', 'abcdd'))]

    def draws(seed):
        pool = PairPool(PairConfig(theta=0.5, k=2, selection='random', seed=seed))
        pool.rebuild(fails, passes)
        return [tuple(pair.key for pair in pool.select().pairs) for _ in range(30)]

    first = draws(7)
    assert first == draws(7)
    assert all(len(set(keys)) == 2 for keys in first)
    assert {key for keys in first for key in keys} == {('f', f'p{i}') for i in range(4)}


def test_random_selection_without_pairs_falls_back():
    fail, _, _ = hex_cases()
    pool = PairPool(PairConfig(theta=0.5, k=2, selection='random'))
    pool.rebuild([fail], [])
    assert pool.select() == FailOnly((fail,))


def test_without_pairs_failing_tests_take_turns():
    fails = [case(f'f{i}', s=text) for i, text in enumerate(('abcd', 'abce', 'abcf'))]
    pool = PairPool(PairConfig(theta=0.5, k=2, use_pairs=False))
    pool.rebuild(fails, [case('p', s='abcx')])
    assert pool.pairs
    shown = []
    for _ in range(3):
        feedback = pool.select()
        assert isinstance(feedback, FailOnly)
        shown.append(tuple(fail.id for fail in feedback.failing_cases))
    assert shown == [('f0', 'f1'), ('f2', 'f0'), ('f1', 'f2')]
    assert pool.counters == {}


# ------------------- augmentation -------------------
def test_assertion_oracle_tests_are_not_augmented(hexparse_bug, harness_cfg):
    fail = case('t_fail_upperhex', oracle_kind=OracleKind.ASSERTION, str='-0Xfade')
    assert augment_passing(fail, hexparse_bug, MutationConfig(candidate_count=10), harness_cfg) == []


def test_zero_budget_skips_augmentation(hexparse_bug, harness_cfg):
    fail, _, _ = hex_cases()
    assert augment_passing(fail, hexparse_bug, MutationConfig(candidate_count=10), harness_cfg,
                           budget_secs=0) == []


def test_hexparse_augmentation_finds_close_passing_inputs(hexparse_bug, harness_cfg):
    fail, _, _ = hex_cases()
    passing = augment_passing(fail, hexparse_bug, MutationConfig(candidate_count=400), harness_cfg,
                              budget_secs=600)
    assert passing
    assert all(c.provenance is Provenance.MUTATED for c in passing)
    assert max(delta(fail, c) for c in passing) >= 0.9
