import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from engelalg.engel import (
    GROUP,
    SUPER_ENGEL,
    TensorAlgebra,
    arrangement_sum,
    brute_force_sum,
    build_case_matrix,
    build_relation_matrix,
    embed_in_tensor,
    expand_group_identity,
    expand_super_engel,
    permutation_terms,
)
from engelalg.errors import InvalidInput
from engelalg.exactla import smith_normal_form
from engelalg.grassmann import GrassmannMonomial, permutation_sign, product
from engelalg.superalg import FreeLieSuperalgebra
from engelalg.young import CaseSpec


def gens(alg):
    return [{alg.generator(i + 1): 1} for i in range(alg.k)]


def test_all_even_reduces_to_plain_sum():
    alg = FreeLieSuperalgebra("eeeeee", 6)
    g = gens(alg)
    want = {}
    for perm in itertools.permutations(range(5)):
        for k, v in alg.left_normed([g[0]] + [g[1 + i] for i in perm]).items():
            want[k] = want.get(k, 0) + v
    assert expand_super_engel(alg, g[0], g[1:]) == {k: v for k, v in want.items() if v}
    assert all(s == 1 for _, s in permutation_terms([0] * 5))


def test_all_odd_sign_is_permutation_sign():
    for perm, s in permutation_terms([1] * 5):
        assert s == permutation_sign(perm)
    assert len(permutation_terms([1, 0, 1, 0, 0])) == 120


def test_inhomogeneous_slot_rejected():
    alg = FreeLieSuperalgebra("eo", 3)
    with pytest.raises(InvalidInput):
        expand_super_engel(alg, {0: 1}, [{0: 1, 1: 1}])


PATTERNS = ["".join(p) for p in itertools.product("eo", repeat=4)]


@pytest.mark.parametrize("pattern", PATTERNS)
def test_tensor_keystone(pattern):
    """Unsigned sums in K (x) G against |sigma_odd| sums in K tensored with a fixed monomial."""
    K = FreeLieSuperalgebra("eeee", 4)
    T = TensorAlgebra(K)
    mons, e = [], 1
    for c in pattern:
        mons.append((e,) if c == "o" else (e, e + 1))
        e += 1 if c == "o" else 2
    imgs = [{(K.generator(i + 1), mons[i]): 1} for i in range(4)]
    M = product([GrassmannMonomial(m) for m in mons])
    par = [1 if c == "o" else 0 for c in pattern[1:]]
    total = {}
    for perm, sign in permutation_terms(par):
        direct = imgs[0]
        for i in perm:
            direct = T.mul(direct, imgs[1 + i])
        plain = K.left_normed([{K.generator(1): 1}] + [{K.generator(2 + i): 1} for i in perm])
        assert direct == {(k, M.indices): sign * M.coefficient * v for k, v in plain.items()}
        for k, v in direct.items():
            total[k] = total.get(k, 0) + v
    total = {k: v for k, v in total.items() if v}
    g = gens(K)
    signed = expand_super_engel(K, g[0], g[1:], par)
    assert total == {(k, M.indices): M.coefficient * v for k, v in signed.items()}


@pytest.mark.parametrize("pattern", ["eeo", "oeo", "ooo", "oee", "ooe"])
def test_superalgebra_embeds_in_tensor(pattern):
    S = FreeLieSuperalgebra(pattern, 5)
    K = FreeLieSuperalgebra("eee", 5)
    T = TensorAlgebra(K)
    mons, e = [], 1
    for c in pattern:
        mons.append((e,) if c == "o" else (e, e + 1))
        e += 1 if c == "o" else 2
    phi = embed_in_tensor(S, T, [{(K.generator(i + 1), mons[i]): 1} for i in range(3)])
    for i, j in itertools.product(range(len(S.basis)), repeat=2):
        if S.in_bounds(i, j):
            assert phi(S.product(i, j)) == T.mul(phi({i: 1}), phi({j: 1}))


def test_group_identity_terms_and_weight():
    alg = FreeLieSuperalgebra("ee", 7)
    a, b = gens(alg)
    assert len(permutation_terms([0] * 5)) == 120
    v = expand_group_identity(alg, a, [b, a, a, a, a], a)
    assert {alg.basis[k].weight for k in v} <= {7}
    assert v == brute_force_sum(alg, a, [b, a, a, a, a], {2: a})


def test_equal_slots_swap_invariance():
    alg = FreeLieSuperalgebra("eeo", 7)
    a, b, c = gens(alg)
    s1 = expand_group_identity(alg, a, [b, c, b, a, a], b)
    s2 = expand_group_identity(alg, a, [b, b, c, a, a], b)
    assert s1 == s2
    half = expand_group_identity(alg, a, [b, c, b, a, a], b, full=False)
    assert s1 == {k: 4 * v for k, v in half.items()}  # two equal pairs: 2! * 2!


def test_repeated_odd_slot_kills_sum():
    alg = FreeLieSuperalgebra("eo", 5)
    a, c = gens(alg)
    assert expand_super_engel(alg, a, [c, c, a]) == {}
    assert brute_force_sum(alg, a, [c, c, a]) == {}


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["eo", "oo", "eeo", "oe"]), st.integers(0, 10**6))
def test_arrangement_matches_brute_force(par, seed):
    rng = random.Random(seed)
    alg = FreeLieSuperalgebra(par, 7)
    low = [b.index for b in alg.basis if b.weight <= 2]
    ones = [b.index for b in alg.basis if b.weight == 1]
    lead = {rng.choice(low): 1}
    slots = [{rng.choice(ones): 1} for _ in range(4)]
    assert arrangement_sum(alg, lead, slots) == brute_force_sum(alg, lead, slots)
    fixed = {2: {rng.choice(ones): 1}}
    assert arrangement_sum(alg, lead, slots[:3], fixed) == brute_force_sum(alg, lead, slots[:3], fixed)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["eee", "eeo", "oeo"]), st.integers(0, 10**6))
def test_multilinear_in_a_slot(par, seed):
    rng = random.Random(seed)
    alg = FreeLieSuperalgebra(par, 6)
    B = alg.basis
    w1 = [b.index for b in B if b.weight == 1]
    lead = {rng.choice(w1): 1}
    rest = [{rng.choice(w1): 1} for _ in range(2)]
    same = [b.index for b in B if b.weight == 2]
    by_par = {}
    for i in same:
        by_par.setdefault(B[i].parity, []).append(i)
    p = rng.choice(sorted(by_par))
    x, y = rng.choice(by_par[p]), rng.choice(by_par[p])
    s = dict({x: 1})
    s[y] = s.get(y, 0) + 1
    lhs = expand_super_engel(alg, lead, [s] + rest)
    rhs = {}
    for part in ({x: 1}, {y: 1}):
        for k, v in expand_super_engel(alg, lead, [part] + rest).items():
            rhs[k] = rhs.get(k, 0) + v
    assert lhs == {k: v for k, v in rhs.items() if v}


def test_two_even_generators_5_1():
    alg = FreeLieSuperalgebra("ee", 6, (5, 1))
    rm = build_relation_matrix(alg, (5, 1))
    assert rm.shape == (2, 1)
    assert sorted(r[0] for r in rm.rows) == [-24, 120]
    assert smith_normal_form(rm.matrix()) == [24]


def test_one_odd_generator_weight_two():
    alg = FreeLieSuperalgebra("o", 2)
    rm = build_relation_matrix(alg, (2,))
    assert rm.shape == (0, 1)


def test_empty_component():
    alg = FreeLieSuperalgebra("o", 4)
    rm = build_relation_matrix(alg, (4,))
    assert rm.shape == (0, 0)


def test_rows_round_trip_and_homogeneity():
    case = CaseSpec((1, 0, 0), (2, 4, 2), ())
    alg, rm = build_case_matrix(case)
    assert rm.shape[1] == len(alg.component((2, 4, 2)))
    seen = set()
    for row, inst in zip(rm.rows, rm.instances):
        lead = {inst.leading: 1}
        slots = [{i: 1} for i in inst.slots]
        vec = brute_force_sum(alg, lead, slots)
        assert {rm.columns.index(k): v for k, v in vec.items()} == row
        key = tuple(sorted(row.items()))
        neg = tuple(sorted((k, -v) for k, v in row.items()))
        assert key not in seen and neg not in seen
        seen.add(key)
    assert rm.diagnostics["instances"] == len(rm.rows) + rm.diagnostics["zero_rows"] + rm.diagnostics["duplicate_rows"]


def test_group_rows_only_for_group_cases():
    plain = CaseSpec((0, 0), (6, 1), ())
    _, rm = build_case_matrix(plain)
    assert {i.source for i in rm.instances} <= {SUPER_ENGEL}
    tagged = CaseSpec((0, 0), (6, 1), (), relations=("engel", "group"))
    _, rm2 = build_case_matrix(tagged)
    assert GROUP in {i.source for i in rm2.instances}
    assert rm2.shape[0] >= rm.shape[0]


def test_weight_above_class_rejected():
    alg = FreeLieSuperalgebra("ee", 5)
    with pytest.raises(InvalidInput):
        build_relation_matrix(alg, (5, 1))
