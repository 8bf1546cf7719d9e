import itertools

import pytest

from engelalg.engel import build_relation_matrix
from engelalg.errors import InvalidInput
from engelalg.exactla import rank_mod_p
from engelalg.nilquot import Presentation, class_one, next_class, parse_relation, run, verify
from engelalg.superalg import FreeLieSuperalgebra
from oracles import super_dims, witt


def dims(preset, gens, p, max_class, **kw):
    return run(Presentation.preset(preset, gens, p, max_class, **kw))


def test_free_class_two():
    pres = Presentation.preset("free", 2, 11, 2)
    q = next_class(class_one(pres), pres)
    assert q.dimensions == [2, 1]
    assert q.element_string(2) == "[b,a]"


@pytest.mark.parametrize("k", [1, 2, 3])
def test_free_matches_witt(k):
    q = dims("free", k, 11, 6)
    assert q.dimensions[: q.cls] == [witt(k, n) for n in range(1, q.cls + 1)]


@pytest.mark.parametrize("par", [(0, 1), (1, 1), (0, 0, 1)])
def test_free_super_matches_pbw(par):
    q = run(Presentation(par, 13, 6))
    m, k = par.count(0), par.count(1)
    L = super_dims(m, k, 6)
    want = [sum(L[(n, j)] for j in range(n + 1)) for n in range(1, 7)]
    assert q.dimensions[: len(want)] == want[: q.cls]


def test_engel2_closes():
    assert dims("engel2", 3, 5, 8).nilpotency_class == 2
    q = dims("engel2", 3, 3, 8)
    assert q.nilpotency_class == 3 and q.terminated == "closed"


def test_engel3_two_generators():
    q = dims("engel3", 2, 7, 8)
    assert q.terminated == "closed" and q.nilpotency_class <= 4


def test_engel4_two_generators():
    q = dims("engel4", 2, 7, 10)
    assert q.terminated == "closed" and q.nilpotency_class <= 7


def test_engel3_char2_grows_with_generators():
    q = dims("engel3", 4, 2, 4)
    assert q.dimensions[3] > 0


@pytest.mark.parametrize("preset,gens,p,top", [("engel3", 3, 7, 6), ("engel4", 2, 5, 9), ("engel2", 3, 3, 5)])
def test_overlap_set_agrees_with_all_triples(preset, gens, p, top):
    a = dims(preset, gens, p, top)
    b = dims(preset, gens, p, top, consistency="full")
    assert a.dimensions == b.dimensions
    assert a.dump() == b.dump()


@pytest.mark.parametrize(
    "par,deg,p,top",
    [("ee", 4, 7, 7), ("eo", 3, 7, 6), ("ee", 5, 11, 8), ("eo", 4, 11, 6), ("oo", 3, 5, 6)],
)
def test_agrees_with_relation_matrices(par, deg, p, top):
    """Layer dimensions equal free dimensions minus relation-matrix ranks, component by component."""
    parities = tuple(0 if c == "e" else 1 for c in par)
    q = run(Presentation(parities, p, top, engel=deg))
    alg = FreeLieSuperalgebra(par, top)
    for w in range(1, q.cls + 1):
        for mw in itertools.product(range(w + 1), repeat=len(par)):
            if sum(mw) != w:
                continue
            cols = alg.component(mw)
            rank = 0
            if w > deg and cols:
                rm = build_relation_matrix(alg, mw, degree=deg)
                rank = rank_mod_p(rm.matrix(), p) if rm.rows else 0
            assert q.components(w).get(mw, 0) == len(cols) - rank, (w, mw)


def test_monotone_under_relations():
    free = dims("free", 2, 11, 9)
    eng = dims("engel5", 2, 11, 9)
    for a, b in zip(free.dimensions, eng.dimensions):
        assert b <= a


def test_super_mode_all_even_equals_lie_mode():
    a = run(Presentation((0, 0), 11, 9, engel=5))
    b = Presentation.preset("engel5", 2, 11, 9, parities=(0, 0))
    assert a.dump() == run(b).dump()


def test_cross_validation_5_1_component():
    q = dims("engel5", 2, 11, 7)
    assert q.components(6).get((5, 1), 0) == 0
    assert FreeLieSuperalgebra("ee", 6).component((5, 1))


def test_verification_on_completed_quotients():
    for pres in (
        Presentation.preset("engel3", 3, 7, 8),
        Presentation.preset("engel4", 2, 7, 10),
        Presentation.preset("engel3", 2, 5, 8, parities=(0, 1)),
    ):
        q = run(pres)
        rep = verify(q, pres, triples=2000, engel=200, seed=1)
        assert rep["failures"] == {} and rep["triples"] > 0 and rep["engel_instances"] > 0


def test_explicit_relations():
    rel = parse_relation("[b,a,a] - 2*[b,a,b]")
    assert rel == ((1, (("b", "a"), "a")), (-2, (("b", "a"), "b")))
    with pytest.raises(InvalidInput):
        Presentation((0, 0), 11, 4, relations=(parse_relation("[b,a,a] + [b,a]"),))
    pres = Presentation((0, 0), 11, 5, relations=(parse_relation("[b,a,a]"),))
    q = run(pres)
    assert q.dimensions[2] == 1
    assert verify(q, pres, triples=300)["failures"] == {}


def test_caps_restrict_multiweights():
    q = run(Presentation((0, 0), 11, 6, caps=(2, 4)))
    for e in q.elements:
        assert e.multiweight[0] <= 2 and e.multiweight[1] <= 4


def test_large_prime():
    q = dims("engel4", 2, 11899028767, 10)
    assert q.dimensions == dims("engel4", 2, 11, 10).dimensions


def test_budget_returns_partial_result():
    q = run(Presentation.preset("engel5", 3, 11, 12), time_budget=0.5)
    assert q.terminated == "budget" and q.cls >= 1


def test_definitions_are_acyclic():
    q = dims("engel4", 2, 7, 10)
    for i, e in enumerate(q.elements):
        if e.definition is not None:
            left, g = e.definition
            assert left < i and q.elements[g].weight == 1
            assert q.product(left, g) == {i: 1}


def test_presentation_validation():
    with pytest.raises(InvalidInput):
        Presentation((0, 0), 12, 4)
    with pytest.raises(InvalidInput):
        Presentation.preset("engelx", 2, 5)
    with pytest.raises(InvalidInput):
        Presentation((0, 0), 5, 4, caps=(1,))
