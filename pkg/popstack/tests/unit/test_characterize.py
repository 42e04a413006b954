import random
from math import factorial

import pandas as pd
import pytest
from popstack import characterize
from popstack.avoidance import AvoidancePair, avoids_all, two_avoids, two_contains
from popstack.characterize import (
    ONE_PASS_PAIR,
    TWO_PASS_PAIR,
    ConstructionConfig,
    ReductionCheckError,
    Removal,
    bounds,
    construct_omega1,
    construct_omega2,
    construct_pair,
    count_av2,
    count_sortable,
    count_table,
    lemma_b_literal_applies,
    reduce_lemma_A,
    reduce_lemma_B,
    reduce_lemma_C,
    reduce_pair,
    reduce_pair_with_log,
    same_av2,
    sortable_table,
    verify_pair,
)
from popstack.enumeration import (
    ENV_MAX_ENUM_LEN,
    EnumerationBudgetError,
    all_permutations,
    check_budget,
    max_enum_len,
)
from popstack.pair_file import write_pair_file
from popstack.permutation import Permutation, patterns_contained, reduce
from popstack.pop_stack import is_k_sortable


def p(text):
    return Permutation.from_text(text)


def pair(forbidden, saving=()):
    return AvoidancePair.of(forbidden, saving)


@pytest.fixture(scope="module")
def small_omega():
    omega1 = construct_omega1(2, 5)
    omega2 = construct_omega2(2, omega1, 6)
    return AvoidancePair(omega1, omega2)


@pytest.fixture(scope="module")
def omega1_cap7():
    return construct_omega1(2, 7)


@pytest.fixture(scope="module")
def full_omega1():
    return construct_omega1(2, 9, jobs=-1)


@pytest.mark.parametrize(
    "prior,k,expected",
    [
        (ONE_PASS_PAIR.forbidden, 2, (3, 9, 243)),
        ([p("1")], 1, (1, 3, 27)),
        (TWO_PASS_PAIR.forbidden, 3, (4, 12, 972)),
    ],
)
def test_bounds(prior, k, expected):
    assert bounds(prior, k) == expected


def test_bounds_errors():
    with pytest.raises(ValueError):
        bounds([], 2)
    with pytest.raises(ValueError):
        bounds([p("1")], -1)
    with pytest.raises(OverflowError):
        bounds([p("1")], 1, ceiling=10)
    with pytest.raises(OverflowError):
        bounds([p("21")], 40)


def test_budget_from_environment(monkeypatch):
    monkeypatch.delenv(ENV_MAX_ENUM_LEN, raising=False)
    assert max_enum_len() == 10
    monkeypatch.setenv(ENV_MAX_ENUM_LEN, "5")
    assert max_enum_len() == 5
    with pytest.raises(EnumerationBudgetError):
        check_budget(6)
    monkeypatch.setenv(ENV_MAX_ENUM_LEN, "99")
    assert max_enum_len() == 16
    monkeypatch.setenv(ENV_MAX_ENUM_LEN, "many")
    with pytest.raises(ValueError):
        max_enum_len()


def test_construct_omega1():
    assert construct_omega1(1, 3) == {p("231"), p("312")}
    assert construct_omega1(2, 1) == frozenset()
    assert construct_omega1(2, 4) == TWO_PASS_PAIR.forbidden


def test_construct_omega1_refuses_beyond_budget():
    with pytest.raises(EnumerationBudgetError):
        construct_omega1(2, 11, limit=10)
    with pytest.raises(ValueError):
        construct_omega1(2, 0)


def test_construct_omega2():
    omega2 = construct_omega2(2, {p("3241")}, 5)
    assert p("41352") in omega2
    assert all(is_k_sortable(q, 2) for q in omega2)
    assert construct_omega2(2, {p("3241")}, 3) == frozenset()
    with pytest.raises(ValueError):
        construct_omega2(2, set(), 5)


def test_omega2_members_contain_omega1(small_omega):
    for kappa in small_omega.saving:
        assert is_k_sortable(kappa, 2)
        assert not two_avoids(kappa, AvoidancePair(small_omega.forbidden))


def test_omega_pair_is_sound_when_truncated():
    omega1 = construct_omega1(2, 6)
    omega2 = construct_omega2(2, omega1, 6)
    report = verify_pair(AvoidancePair(omega1, omega2), 2, 6)
    assert report.ok
    assert list(report.counts["av2_count"]) == list(report.counts["sortable_count"])


@pytest.mark.parametrize("omega2_cap", [6, 7])
def test_truncated_omega2_is_sound(omega1_cap7, omega2_cap):
    omega2 = construct_omega2(2, omega1_cap7, omega2_cap)
    report = verify_pair(AvoidancePair(omega1_cap7, omega2), 2, 7)
    assert all(m.sortable and not m.two_avoids for m in report.mismatches)
    if omega2_cap == 7:
        assert report.ok


@pytest.mark.slow
@pytest.mark.parametrize("omega2_cap", [6, 7])
def test_truncated_omega2_is_sound_up_to_length_9(full_omega1, omega2_cap):
    omega2 = construct_omega2(2, full_omega1, omega2_cap, jobs=-1)
    report = verify_pair(AvoidancePair(full_omega1, omega2), 2, 9, jobs=-1)
    assert all(m.sortable and not m.two_avoids for m in report.mismatches)


def test_omega1_members_cannot_be_saved(small_omega):
    omega1 = construct_omega1(2, 6)
    every_sortable = [
        q for q in all_permutations(6, min_length=1) if is_k_sortable(q, 2)
    ]
    for saving in ((), small_omega.saving, every_sortable):
        candidate = AvoidancePair.of(omega1, saving)
        for q in all_permutations(6):
            if not is_k_sortable(q, 2):
                assert two_contains(q, candidate) is not None


def saving_candidates_by_brute_force(k, cap):
    return {
        kappa
        for kappa in all_permutations(cap, min_length=1)
        if is_k_sortable(kappa, k)
        and any(not is_k_sortable(q, k) for q in patterns_contained(kappa))
    }


def test_construct_omega2_matches_brute_force(omega1_cap7):
    expected = saving_candidates_by_brute_force(2, 5)
    assert p("41352") in expected
    assert construct_omega2(2, omega1_cap7, 5) == expected


@pytest.mark.slow
def test_construct_omega2_from_full_omega1(full_omega1):
    expected = saving_candidates_by_brute_force(2, 5)
    assert construct_omega2(2, full_omega1, 5) == expected


@pytest.mark.parametrize(
    "before,after",
    [
        (pair(["21"], ["123"]), pair(["21"])),
        (pair(["3241"], ["41352"]), pair(["3241"], ["41352"])),
        (pair(["231", "312"], ["1234"]), pair(["231", "312"])),
    ],
)
def test_reduce_lemma_A(before, after):
    assert reduce_lemma_A(before) == after
    assert same_av2(before, after, 6) is None


@pytest.mark.parametrize(
    "before,after",
    [
        (pair(["21"], ["321", "21"]), pair(["21"], ["21"])),
        (pair(["3241"], ["41352"]), pair(["3241"], ["41352"])),
        (pair(["12"], ["132", "1324"]), pair(["12"], ["132", "1324"])),
    ],
)
def test_reduce_lemma_B(before, after):
    assert reduce_lemma_B(before) == after
    assert same_av2(before, after, 7) is None


def test_literal_lemma_b_hypothesis_is_not_enough():
    before = pair(["12"], ["132", "1324"])
    assert lemma_b_literal_applies(before, p("1324"))
    dropped = before.with_sets(saving=[p("132")])
    assert two_avoids(p("1324"), before)
    assert not two_avoids(p("1324"), dropped)


def test_lemma_b_blocked_by_extra_forbidden_pattern():
    # 321 contains 21 and 321 is forbidden too; 21 does not contain 321.
    before = pair(["21", "321"], ["21", "321"])
    assert not lemma_b_literal_applies(before, p("321"))
    assert reduce_lemma_B(before) == before


@pytest.mark.parametrize(
    "before,after",
    [
        (pair(["231", "4231"]), pair(["231"])),
        (pair(["3241", "43251"], ["41352"]), pair(["3241", "43251"], ["41352"])),
        (pair(["21", "321"], ["132"]), pair(["21", "321"], ["132"])),
        (pair(["21", "321"], ["123"]), pair(["21"], ["123"])),
    ],
)
def test_reduce_lemma_C(before, after):
    assert reduce_lemma_C(before) == after
    assert same_av2(before, after, 7) is None


def random_permutation(rng, length):
    return Permutation(rng.sample(range(1, length + 1), length))


def random_pattern_of(rng, host, length):
    return reduce([host[i] for i in sorted(rng.sample(range(len(host)), length))])


def random_patterns(rng, count, min_length, max_length):
    return [
        random_permutation(rng, rng.randint(min_length, max_length))
        for _ in range(count)
    ]


def lemma_a_applies(candidate):
    return any(avoids_all(alpha, candidate.F) for alpha in candidate.G)


def lemma_c_applies(candidate):
    covered = frozenset().union(*(patterns_contained(a) for a in candidate.G))
    free = candidate.forbidden - covered
    return any(free & patterns_contained(lam, len(lam) - 1) for lam in candidate.F)


def lemma_a_pair(rng):
    return AvoidancePair.of(
        random_patterns(rng, rng.randint(1, 3), 2, 4),
        random_patterns(rng, rng.randint(1, 3), 2, 5),
    )


def lemma_b_pair(rng):
    alpha = random_permutation(rng, rng.randint(3, 5))
    beta = random_pattern_of(rng, alpha, rng.randint(2, len(alpha) - 1))
    forbidden = [random_pattern_of(rng, beta, rng.randint(1, len(beta)))]
    forbidden += random_patterns(rng, rng.randint(0, 2), 3, 4)
    saving = [alpha, beta] + random_patterns(rng, rng.randint(0, 2), 2, 5)
    return AvoidancePair.of(forbidden, saving)


def lemma_c_pair(rng):
    lam = random_permutation(rng, rng.randint(3, 5))
    kappa = random_pattern_of(rng, lam, rng.randint(2, len(lam) - 1))
    forbidden = [lam, kappa] + random_patterns(rng, rng.randint(0, 2), 2, 4)
    return AvoidancePair.of(forbidden, random_patterns(rng, rng.randint(0, 3), 2, 5))


def generated_pairs(make, applies, seed, size=50):
    rng = random.Random(seed)
    found = []
    for _ in range(100 * size):
        candidate = make(rng)
        if applies(candidate) and candidate not in found:
            found.append(candidate)
            if len(found) == size:
                break
    assert len(found) == size
    return found


LEMMA_A_CORPUS = generated_pairs(lemma_a_pair, lemma_a_applies, 123)
LEMMA_B_CORPUS = generated_pairs(
    lemma_b_pair,
    lambda c: any(lemma_b_literal_applies(c, alpha) for alpha in c.G),
    1324,
)
LEMMA_C_CORPUS = generated_pairs(lemma_c_pair, lemma_c_applies, 4231)

CORPUS_BOUNDS = [5, pytest.param(7, marks=pytest.mark.slow)]


@pytest.mark.parametrize("n_max", CORPUS_BOUNDS)
def test_lemma_a_on_generated_pairs(n_max):
    for before in LEMMA_A_CORPUS:
        after = reduce_lemma_A(before)
        assert after != before
        assert same_av2(before, after, n_max) is None


@pytest.mark.parametrize("n_max", CORPUS_BOUNDS)
def test_lemma_b_on_generated_pairs(n_max):
    for before in LEMMA_B_CORPUS:
        after = reduce_lemma_B(before)
        assert after.forbidden == before.forbidden
        assert same_av2(before, after, n_max) is None


@pytest.mark.parametrize("n_max", CORPUS_BOUNDS)
def test_lemma_c_on_generated_pairs(n_max):
    for before in LEMMA_C_CORPUS:
        after = reduce_lemma_C(before)
        assert after != before
        assert same_av2(before, after, n_max) is None


@pytest.mark.parametrize("n_max", CORPUS_BOUNDS)
def test_reduce_pair_on_generated_pairs(n_max):
    for before in LEMMA_A_CORPUS + LEMMA_B_CORPUS + LEMMA_C_CORPUS:
        after = reduce_pair(before)
        assert same_av2(before, after, n_max) is None


def test_reduce_pair_keeps_pattern_the_lemmas_cannot_remove():
    stuck = pair(["4123", "4231", "43251", "3241"], ["41352"])
    assert reduce_pair(stuck) == stuck
    without = stuck.with_sets(forbidden=stuck.forbidden - {p("43251")})
    assert same_av2(stuck, without, 7) is None


def test_reduce_pair_is_idempotent():
    for before in (TWO_PASS_PAIR, pair(["21", "321"], ["321", "21", "123"])):
        once = reduce_pair(before)
        assert reduce_pair(once) == once


def test_reduce_pair_log():
    reduced, log = reduce_pair_with_log(pair(["231", "4231"], ["12"]))
    assert reduced == pair(["231"])
    assert log == [Removal("A", "G", p("12")), Removal("C", "F", p("4231"))]
    assert str(log[1]) == "lemma C: removed 4 2 3 1 from F"


def test_reduce_small_omega(small_omega):
    reduced = reduce_pair(small_omega, check_bound=7)
    assert len(reduced.forbidden) < len(small_omega.forbidden)
    assert len(reduced.saving) <= len(small_omega.saving)
    assert reduced.forbidden <= small_omega.forbidden


def test_reduction_check_catches_unsound_removal(monkeypatch):
    def drop_everything(current, log):
        return current.with_sets(forbidden=())

    monkeypatch.setattr(characterize, "_apply_lemma_c", drop_everything)
    with pytest.raises(ReductionCheckError):
        reduce_pair(pair(["21"]), check_bound=3)


def test_verify_one_pass_pair():
    report = verify_pair(ONE_PASS_PAIR, 1, 8)
    assert report.ok
    expected = [1, 2, 4, 8, 16, 32, 64, 128]
    assert list(report.counts["sortable_count"]) == expected
    assert list(report.counts["av2_count"]) == expected
    assert list(report.counts.columns) == [
        "n",
        "av2_count",
        "sortable_count",
        "mismatches",
    ]
    assert report.to_csv().splitlines()[:2] == [
        "n,av2_count,sortable_count,mismatches",
        "1,1,1,0",
    ]


def test_verify_reports_mismatches():
    report = verify_pair(ONE_PASS_PAIR, 2, 4)
    expected = {
        q
        for q in all_permutations(4, min_length=1)
        if is_k_sortable(q, 2) and not is_k_sortable(q, 1)
    }
    assert not report.ok
    assert {m.permutation for m in report.mismatches} == expected
    assert all(m.sortable and not m.two_avoids for m in report.mismatches)


def test_verify_two_pass_pair():
    report = verify_pair(TWO_PASS_PAIR, 2, 7)
    assert report.ok
    assert report.counts["mismatches"].sum() == 0


@pytest.mark.slow
def test_verify_two_pass_pair_length_8():
    report = verify_pair(TWO_PASS_PAIR, 2, 8)
    assert report.ok


def test_verify_results_do_not_depend_on_jobs():
    serial = verify_pair(TWO_PASS_PAIR, 2, 7, jobs=1)
    parallel = verify_pair(TWO_PASS_PAIR, 2, 7, jobs=2)
    assert serial.to_csv() == parallel.to_csv()


def test_counts():
    assert count_sortable(1, 5) == 16
    assert count_sortable(3, 1) == 1
    example = pair(["1"], ["12", "21"])
    assert count_av2(example, 1) == 0
    for n in range(2, 6):
        assert count_av2(example, n) == factorial(n)


def test_count_table_without_pair():
    table = count_table(1, 4)
    assert list(table["sortable_count"]) == [1, 2, 4, 8]
    assert table["av2_count"].isna().all()
    assert table.to_csv(index=False).splitlines()[1] == "1,,1,"


def test_sortable_table():
    expected = pd.DataFrame(
        {
            "n": [1, 2, 3, 4],
            "k0": [1, 1, 1, 1],
            "k1": [1, 2, 4, 8],
            "k2": [1, 2, 6, 16],
        }
    )
    assert sortable_table(2, 4).equals(expected)


def test_construction_config_defaults():
    config = ConstructionConfig(k=2)
    assert config.prior == ONE_PASS_PAIR
    assert config.f_max == 3
    assert config.C == 243
    assert config.resolved_omega1_cap == 9
    assert config.caps_reach_bounds
    assert not ConstructionConfig(k=2, omega1_cap=5).caps_reach_bounds
    assert ConstructionConfig(k=3).prior == TWO_PASS_PAIR


def test_construction_config_omega2_cap_follows_budget(monkeypatch):
    monkeypatch.setenv(ENV_MAX_ENUM_LEN, "8")
    assert ConstructionConfig(k=2).resolved_omega2_cap == 8


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(k=0),
        dict(k=2, omega1_cap=10),
        dict(k=2, omega2_cap=244),
        dict(k=2, omega1_cap=0),
        dict(k=2, jobs=0),
        dict(k=5),
    ],
)
def test_construction_config_rejects(kwargs):
    with pytest.raises(ValueError):
        ConstructionConfig(**kwargs)


def test_construction_config_from_yaml(tmp_path):
    write_pair_file(ONE_PASS_PAIR, str(tmp_path / "prior.pairs"))
    path = tmp_path / "config.yaml"
    path.write_text(
        "k: 2\nomega1_cap: 4\nomega2_cap: 5\nprior_pair: prior.pairs\njobs: 1\n"
    )
    config = ConstructionConfig.from_yaml(str(path))
    assert config == ConstructionConfig(
        k=2, omega1_cap=4, omega2_cap=5, prior_pair=ONE_PASS_PAIR, jobs=1
    )
    overridden = ConstructionConfig.from_yaml(str(path), omega2_cap=6, jobs=None)
    assert overridden.omega2_cap == 6
    assert overridden.jobs == 1


def test_construction_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("k: 2\nomega3_cap: 4\n")
    with pytest.raises(ValueError):
        ConstructionConfig.from_yaml(str(path))


def test_construct_pair(small_omega):
    config = ConstructionConfig(k=2, omega1_cap=5, omega2_cap=6)
    assert construct_pair(config) == small_omega


def test_characterize_reduces_and_checks(small_omega):
    config = ConstructionConfig(k=2, omega1_cap=5, omega2_cap=6, check_bound=6)
    reduced, log = characterize.characterize(config)
    assert log
    assert same_av2(small_omega, reduced, 6) is None


def test_characterize_without_reduction_reports_unused_check_bound(capsys):
    config = ConstructionConfig(k=2, omega1_cap=4, omega2_cap=5, check_bound=6)
    built, log = characterize.characterize(config, reduce=False)
    assert log == []
    assert built.forbidden == TWO_PASS_PAIR.forbidden
    assert "check_bound 6 ignored" in capsys.readouterr().err
