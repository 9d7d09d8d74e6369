import json
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given

from conftest import SCENARIOS, rngs
from kstab import cli
from kstab.exact import RatMatrix
from kstab.git import (
    GitError,
    StabilityClass,
    TorusAction,
    act,
    classify,
    enumerate_classification,
    format_monomial,
    invariant_monomials,
    projective_equal,
    quotient_coords,
    verify_action_samples,
)

ACTIONS = {}
for _name in ("git_first.json", "git_second.json"):
    for _k, _a in json.loads((SCENARIOS / _name).read_text())["actions"].items():
        ACTIONS[_k] = TorusAction(tuple(_a["coords"]), tuple(tuple(w) for w in _a["weights"]))
FIRST, SECOND = ACTIONS["first"], ACTIONS["second"]
S = StabilityClass


def hm_oracle(weights, box=8):
    """Hilbert-Mumford by brute force over one-parameter subgroups in a box."""
    rank = len(weights[0])
    stable, polystable, unstable = True, True, False
    for lam in product(range(-box, box + 1), repeat=rank):
        if not any(lam):
            continue
        vals = [sum(a * b for a, b in zip(lam, w)) for w in weights]
        if all(v > 0 for v in vals):
            unstable = True
        if all(v >= 0 for v in vals):
            stable = False
            if any(v > 0 for v in vals):
                polystable = False
    if unstable:
        return S.UNSTABLE
    if stable:
        return S.STABLE
    return S.POLYSTABLE_NOT_STABLE if polystable else S.SEMISTABLE_NOT_POLYSTABLE


def rand_action(r):
    rank = r.choice((1, 2, 2))
    n = r.randint(2, 6)
    weights = tuple(tuple(r.randint(-3, 3) for _ in range(rank)) for _ in range(n))
    return TorusAction(tuple(f"x{i}" for i in range(n)), weights)


def rand_support(r, n):
    return sorted(r.sample(range(n), r.randint(1, n)))


# tables

def test_first_table_unstable_patterns():
    t = enumerate_classification(FIRST)
    unstable = set(t.supports(S.UNSTABLE))
    # every unstable support misses alpha and lies in one open half of the weight square
    assert all("alpha" not in s for s in unstable)
    assert unstable == {("beta",), ("gamma",), ("delta",), ("epsilon",), ("beta", "gamma"),
                        ("beta", "delta"), ("gamma", "epsilon"), ("delta", "epsilon")}


def test_first_table_stable_iff_four_nonzero():
    for row in enumerate_classification(FIRST).rows:
        assert (row.verdict is S.STABLE) == ({"beta", "gamma", "delta", "epsilon"} <= set(row.names))


def test_second_table_has_no_strictly_semistable_rows():
    t = enumerate_classification(SECOND)
    assert t.counts()["SemistableNotPolystable"] == 0
    assert t.counts()["PolystableNotStable"] == 0
    for row in t.rows:
        names = set(row.names)
        unstable = "alpha" not in names or not names & {"p_be", "p_gd"} or not names & {"m_be", "m_gd"}
        assert (row.verdict is S.UNSTABLE) == unstable


def test_tables_match_brute_force():
    for action in (FIRST, SECOND):
        for row in enumerate_classification(action).rows:
            assert row.verdict is hm_oracle([action.weights[i] for i in row.support])


def test_table_is_sorted_and_complete():
    t = enumerate_classification(FIRST)
    assert len(t.rows) == 2 ** 5 - 1
    assert [len(r.support) for r in t.rows] == sorted(len(r.support) for r in t.rows)
    assert "counts:" in t.render()


# properties

@given(rngs)
def test_classify_matches_hilbert_mumford(r):
    a = rand_action(r)
    sup = rand_support(r, len(a.coords))
    assert classify(a, sup) is hm_oracle([a.weights[i] for i in sup])


@given(rngs)
def test_classes_partition_invariances_and_monotonicity(r):
    a = rand_action(r)
    n = len(a.coords)
    sup = rand_support(r, n)
    verdict = classify(a, sup)
    assert sum(verdict is c for c in S) == 1
    # negating every weight inverts the torus
    neg = TorusAction(a.coords, tuple(tuple(-x for x in w) for w in a.weights))
    assert classify(neg, sup) is verdict
    # permuting coordinates, carrying the support along
    perm = list(range(n))
    r.shuffle(perm)
    moved = TorusAction(tuple(a.coords[p] for p in perm), tuple(a.weights[p] for p in perm))
    assert classify(moved, [a.coords[i] for i in sup]) is verdict
    # swapping two coordinates with equal weights does not change anything
    for i in range(n):
        for j in range(i + 1, n):
            if a.weights[i] == a.weights[j]:
                swap = {i: j, j: i}
                assert classify(a, [swap.get(k, k) for k in sup]) is verdict
    # enlarging the support only moves towards stability
    after = classify(a, sorted(set(sup) | set(rand_support(r, n))))
    if verdict is S.STABLE:
        assert after is S.STABLE
    if verdict is not S.UNSTABLE:
        assert after is not S.UNSTABLE


FIRST_MAP = ["alpha^2", "beta*epsilon", "gamma*delta"]


@given(rngs)
def test_first_quotient_map_constant_on_orbits(r):
    pt = [Fraction(r.randint(-9, 9), r.randint(1, 5)) for _ in FIRST.coords]
    if pt[0] == 0 and (pt[1] * pt[4] == 0) and (pt[2] * pt[3] == 0):
        return
    t = [Fraction(r.choice((-1, 1)) * r.randint(1, 9), r.randint(1, 9)) for _ in range(2)]
    image = act(FIRST, t, pt)
    a = quotient_coords(FIRST_MAP, FIRST.coords, pt)
    b = quotient_coords(FIRST_MAP, FIRST.coords, image)
    assert a == b and projective_equal(a, b)


# invariants

def test_first_invariants():
    got = {format_monomial(FIRST.coords, e) for e in invariant_monomials(FIRST, 2, exact_degree=True)}
    assert got == {"alpha^2", "beta*epsilon", "gamma*delta"}
    low = {format_monomial(FIRST.coords, e) for e in invariant_monomials(FIRST, 2)}
    assert low == got | {"alpha"}


def test_second_has_nine_quintic_invariants():
    got = invariant_monomials(SECOND, 5, exact_degree=True)
    assert len(got) == 9
    brute = [e for e in product(range(6), repeat=5) if sum(e) == 5
             and all(sum(x * w[k] for x, w in zip(e, SECOND.weights)) == 0 for k in range(2))]
    assert sorted(got) == sorted(brute)
    # each one is alpha times a degree-two monomial in each eigen-pair
    for e in got:
        assert e[0] == 1 and e[1] + e[2] == 2 and e[3] + e[4] == 2


def test_invariant_degree_must_be_positive():
    with pytest.raises(GitError):
        invariant_monomials(FIRST, 0)


# the diagonalised action of the second quotient

def _samples_input():
    data = json.loads((SCENARIOS / "git_second.json").read_text())
    return next(s["inputs"] for s in data["scenarios"] if s["kind"] == "action-samples")


def _check(inp, claimed):
    return verify_action_samples(inp["matrix"], RatMatrix.of(inp["basis_change"]),
                                 [(c, tuple(e)) for c, e in claimed], [tuple(s) for s in inp["samples"]])


def test_action_samples_accept_signed_claim():
    inp = _samples_input()
    assert _check(inp, inp["claimed"])


def test_action_samples_reject_unsigned_claim():
    inp = _samples_input()
    unsigned = inp["claimed"][:-1] + [[4, inp["claimed"][-1][1]]]
    assert not _check(inp, unsigned)


def test_action_samples_reject_wrong_weight():
    inp = _samples_input()
    wrong = [inp["claimed"][0]] + [[4, [2, 2]]] + inp["claimed"][2:]
    assert not _check(inp, wrong)


def test_identity_template_with_zero_weights():
    tmpl = [["1", 0], [0, "1"]]
    assert verify_action_samples(tmpl, RatMatrix.identity(2), [(1, (0, 0)), (1, (0, 0))], [(2, 3)])


# errors and the command line

def test_invalid_actions():
    with pytest.raises(GitError):
        TorusAction(("a", "b"), ((1, 0),))
    with pytest.raises(GitError):
        TorusAction(("a", "b"), ((1, 0), (1,)))
    with pytest.raises(GitError):
        classify(FIRST, [])
    with pytest.raises(GitError):
        classify(FIRST, ["zeta"])


def test_cli_classify(capsys):
    w = "0,0;1,1;1,-1;-1,1;-1,-1"
    assert cli.main(["git", "classify", "--weights", w, "--support", "1,2,3,4"]) == 0
    assert capsys.readouterr().out.strip() == "Stable"
    names = "alpha,beta,gamma,delta,epsilon"
    assert cli.main(["git", "classify", "--weights", w, "--support", "delta,epsilon", "--names", names]) == 0
    assert capsys.readouterr().out.strip() == "Unstable"
    assert cli.main(["git", "classify", "--weights", "1,x", "--support", "0"]) == 2
