import itertools
import random

import pytest

from conftest import P0, P1, TINY
from znec.bounds import (
    CutSpec,
    FourNodeCode,
    InvalidCutChoice,
    InvalidParameters,
    NetworkParams,
    bound_report,
    classify,
    confusion_attack,
    evaluate_links,
    feedback_condition,
    four_node_cut,
    lemma1_margin,
    parameter_grid,
    post_identification_count,
    singleton_bounds,
    sink_observation,
    theorem1_bound,
    theorem1_min,
    theorem2_counts,
    tight_condition,
    upper_bound,
)

GRID = [p for p in parameter_grid()]
TIGHT = [p for p in GRID if tight_condition(p)]


def test_upper_bound_examples():
    assert upper_bound(P0) == 10
    assert upper_bound(P1) == 10
    for a, c in [(3, 1), (7, 4)]:
        assert upper_bound(NetworkParams(n=2, m=2, a=a, b=1, c=c, z=2)) == 1


@pytest.mark.parametrize("n,m,z,cat", [(3, 4, 2, 1), (3, 4, 3, 4), (4, 6, 3, 1), (3, 6, 3, 2), (4, 5, 3, 3)])
def test_classify(n, m, z, cat):
    assert classify(NetworkParams(n=n, m=m, a=5, b=1, c=2, z=z)) == cat


def test_singleton_examples():
    assert singleton_bounds(P0) == {"SB1": 12, "SB2": 12, "SB3": 12, "SB4": 10}
    assert singleton_bounds(P1) == {"SB1": 12, "SB2": 12, "SB3": 12, "SB4": 10}
    p = NetworkParams(n=5, m=6, a=4, b=1, c=2, z=3)
    assert classify(p) == 1 and singleton_bounds(p)["SB1"] == p.n * p.a


def test_tight_examples():
    assert tight_condition(P0)
    # min{z(a-c), zc} = 4 > 3
    assert tight_condition(P0.replace(b=3))
    # min{z(a-c), zc} = min{4, 6} = 4, not above b = 4
    assert not tight_condition(NetworkParams(n=3, m=4, a=5, b=4, c=3, z=2))
    p = NetworkParams(n=3, m=4, a=5, b=4, c=2, z=2)
    # cat 1 limits: z(a-c) = 6, zc-(z-2)a = 4; b = 4 is not below 4
    assert not tight_condition(p)
    assert tight_condition(P1)


def test_tight_example_b_equal_four():
    # the P0 shape with b pushed to 4 needs a > 4; limits stay min{2(a-2), 4} = 4
    assert not tight_condition(NetworkParams(n=3, m=4, a=5, b=4, c=2, z=2))


def test_lemma1_examples():
    assert lemma1_margin(P0, 2) == 2
    assert lemma1_margin(P1, 2) == 2
    for p in (P0, P1):
        assert lemma1_margin(p, 0) == -p.z * (p.a - p.c) - p.b
    with pytest.raises(ValueError):
        lemma1_margin(P0, 4)


def test_invalid_params():
    with pytest.raises(InvalidParameters):
        NetworkParams(n=3, m=4, a=2, b=1, c=2, z=2)
    with pytest.raises(InvalidParameters):
        NetworkParams(n=3, m=4, a=4, b=4, c=2, z=2)
    with pytest.raises(InvalidParameters):
        NetworkParams(n=1, m=4, a=4, b=1, c=2, z=2)
    with pytest.raises(InvalidParameters):
        NetworkParams(n=3, m=4, a=4, b=1, c=2, z=2, q=9)


def _sb_oracle(p):
    """Independent re-derivation: pick each closed form by the raw inequalities, not by category."""
    n, m, a, c, z = p.n, p.m, p.a, p.c, p.z
    sb1 = n * a + (m - 2 * z) * c if m >= 2 * z else (n - (2 * z - m)) * a
    sb2 = (n - 2 * (z - 1)) * a + m * c if n >= 2 * (z - 1) else (m - (2 * (z - 1) - n)) * c
    return sb1, sb2, (n - z + 1) * a + (m - z) * c


def test_singleton_matches_oracle_on_grid():
    for p in GRID:
        sb = singleton_bounds(p)
        assert (sb["SB1"], sb["SB2"], sb["SB3"]) == _sb_oracle(p)


def test_tight_tuples_have_ub_below_singleton():
    assert len(TIGHT) > 1000
    for p in TIGHT:
        r = bound_report(p)
        assert r.ub < min(r.sb["SB1"], r.sb["SB2"], r.sb["SB3"]), p


def test_lemma1_positive_and_monotone():
    for p in TIGHT:
        if p.n >= 2:
            assert lemma1_margin(p, 2) > 0, p
        margins = [lemma1_margin(p, x) for x in range(p.n + 1)]
        assert margins == sorted(margins), p


def test_post_identification_count_covers_ub():
    assert post_identification_count(P0) == 12
    for p in TIGHT:
        assert post_identification_count(p) >= upper_bound(p)


def test_theorem2_counts():
    p = NetworkParams(n=5, m=6, a=3, b=2, c=2, z=3)
    assert feedback_condition(p) == 1
    r1, r2, v = theorem2_counts(p)
    assert (r1, r2) == (0, (5 - 1 - 4) * 3 + 6 * 2)
    covered = 0
    for q in TIGHT:
        if feedback_condition(q) is None:
            continue
        r1, r2, v = theorem2_counts(q)
        assert r1 + r2 + v >= upper_bound(q), q
        covered += 1
    assert covered > 100
    with pytest.raises(InvalidParameters):
        theorem2_counts(P0)


# -- Theorem 1 -------------------------------------------------------------------

def _m_oracle(p, k1, k2):
    """Four-node bound by hand: the feedback link counts iff Z1 holds upstream links and no upstream link is in Z2."""
    total = (p.n - k1) * p.a + (p.m - k2) * p.c
    return total + (p.b if k1 else 0)


def test_four_node_cut_equals_ub():
    for p in GRID:
        cut = four_node_cut(p)
        Z1 = [f"up{j + 1}" for j in range(p.z)]
        Z2 = [f"dn{j + 1}" for j in range(p.z)]
        assert theorem1_bound(cut, Z1, Z2, p.z) == upper_bound(p) == _m_oracle(p, p.z, p.z)


def test_empty_choice_gives_full_cut():
    cut = four_node_cut(P0)
    assert theorem1_bound(cut, [], [], 2) == P0.n * P0.a + P0.m * P0.c


def test_z2_upstream_of_w1_rejected():
    cut = four_node_cut(P0)
    with pytest.raises(InvalidCutChoice, match="invalid Z1/Z2 pair"):
        theorem1_bound(cut, ["up1"], ["up2"], 2)


def test_choice_validation():
    cut = four_node_cut(P0)
    with pytest.raises(InvalidCutChoice):
        theorem1_bound(cut, ["up1"], ["up1"], 2)
    with pytest.raises(InvalidCutChoice):
        theorem1_bound(cut, ["up1", "up2", "up3"], [], 2)
    with pytest.raises(InvalidCutChoice):
        theorem1_bound(cut, ["fb"], [], 2)


def test_cutspec_rejects_unknown_relations():
    with pytest.raises(ValueError):
        CutSpec((("e1", 1),), (("w", 1),), downstream_of=frozenset({("e2", "w")}))


def test_theorem1_min_on_four_node():
    M, Z1, Z2 = theorem1_min(four_node_cut(P0), 2)
    assert M == upper_bound(P0)
    assert M == min(_m_oracle(P0, k1, k2) for k1 in range(3) for k2 in range(3))


def test_refinement_on_four_node_cut():
    for p in GRID[::7]:
        Z1 = [f"up{j + 1}" for j in range(p.z)]
        Z2 = [f"dn{j + 1}" for j in range(p.z)]
        refined = theorem1_bound(four_node_cut(p), Z1, Z2, p.z, refine=True)
        # with m = z nothing downstream survives, so the feedback link drops out
        assert refined == upper_bound(p) - (p.b if p.m == p.z else 0)


def test_refinement_drops_unneeded_feedback():
    # feedback link w sits below e1 and above e3 only; with Z2 = {e3}, W1 is empty after refinement
    cut = CutSpec((("e1", 2), ("e2", 2), ("e3", 2)), (("w", 1),),
                  downstream_of=frozenset({("e1", "w")}), upstream_of=frozenset({("w", "e3")}))
    assert theorem1_bound(cut, ["e1"], ["e3"], 1) == 2 + 1
    assert theorem1_bound(cut, ["e1"], ["e3"], 1, refine=True) == 2
    assert theorem1_bound(cut, ["e1"], ["e2"], 1, refine=True) == 2 + 1


# -- confusion attack ---------------------------------------------------------------

def _brute_force_confusable(p, code, codebook, Z1, Z2):
    """All index pairs whose branches can be made identical by some error vectors."""
    caps = {"up": p.a, "dn": p.c}
    vecs1 = [dict(zip(Z1, combo)) for combo in itertools.product(
        *[list(itertools.product(range(p.q), repeat=caps[l[:2]])) for l in Z1])]
    vecs2 = [dict(zip(Z2, combo)) for combo in itertools.product(
        *[list(itertools.product(range(p.q), repeat=caps[l[:2]])) for l in Z2])]
    obs1 = {}
    for i, x in enumerate(codebook):
        obs1[i] = {sink_observation(evaluate_links(code, x, e)) for e in vecs1}
    pairs = set()
    for i, j in itertools.permutations(range(len(codebook)), 2):
        for e in vecs2:
            if sink_observation(evaluate_links(code, codebook[j], e)) in obs1[i]:
                pairs.add((i, j))
                break
    return pairs


def test_confusion_attack_tiny_matches_exhaustive_search():
    code = FourNodeCode(TINY, seed=4)
    codebook = random.Random(1).sample(range(1000), 17)
    pair = confusion_attack(TINY, codebook, ["up1"], ["dn1"], code=code)
    assert pair is not None and pair.bound == 4
    assert pair.x != pair.x_prime
    oracle = _brute_force_confusable(TINY, code, codebook, ["up1"], ["dn1"])
    assert (pair.index, pair.other_index) in oracle
    o1 = sink_observation(evaluate_links(code, pair.x, pair.errors_z1))
    o2 = sink_observation(evaluate_links(code, pair.x_prime, pair.errors_z2))
    assert o1 == o2


def test_confusion_attack_precondition():
    with pytest.raises(ValueError):
        confusion_attack(TINY, [5], ["up1"], ["dn1"])


def test_confusion_attack_duplicate_codewords():
    codebook = [7, 7] + list(range(100, 115))
    pair = confusion_attack(TINY, codebook, ["up1"], ["dn1"])
    assert (pair.index, pair.other_index) == (0, 1)
    assert all(not any(v) for v in pair.errors_z1.values())
    assert all(not any(v) for v in pair.errors_z2.values())


def test_bound_report_fields():
    r = bound_report(P0)
    assert (r.ub, r.category, r.tight, r.lemma1_margin_at_2) == (10, 1, True, 2)
