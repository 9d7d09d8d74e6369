"""One printed PASS/FAIL line per acceptance criterion.

Values come from running the shipped scenario files through the library;
the expected literals below are written out independently of those files.
"""

from fractions import Fraction

import pytest
from hypothesis import settings

import conftest
import test_cli
import test_exact
import test_git
import test_lattice
import test_zariski
from kstab.exact import parse_poly
from kstab.git import StabilityClass, enumerate_classification
from kstab.scenario import Report
from kstab.stability import check_declared, schedules_identical, surface_schedule

F = Fraction


def _value(results, sid):
    r = results[sid]
    return r.computed, r.verdict


def _is(results, sid, literal):
    """Scenario computed exactly the literal value (rational or polynomial in ord)."""
    computed, verdict = _value(results, sid)
    if isinstance(computed, str) and "ord" in computed:
        return parse_poly(computed) == parse_poly(literal)
    return F(computed) == F(literal)


def _match(results, sid):
    return results[sid].verdict == "match"


def c1(results, scs):
    yield "beta(F) = -3/52 (K-unstable)", _is(results, "beth.K-unstable.betaF", "-3/52")
    yield "schedule verified", _match(results, "beth.K-unstable.schedule")


def c2(results, scs):
    for sid, lit in [("beth.divisorial.H", "21/52"), ("beth.divisorial.E1+E2", "53/208"),
                     ("beth.divisorial.2H-E1-E2", "49/104")]:
        yield f"{sid} = {lit}", _is(results, sid, lit)


def c3(results, scs):
    for sid, lit in [("beth.delta-bound.S_X", "3/4"), ("beth.delta-bound.Z.S_W2", "3/4"),
                     ("beth.delta-bound.l1.S_W2", "99/104"), ("beth.delta-bound.Z.S_W3", "21/26"),
                     ("beth.delta-bound.l1.S_W3.off-l2", "37/52"), ("beth.delta-bound.l1.S_W3.on-l2", "99/104"),
                     ("beth.delta-bound.delta", "104/99")]:
        yield f"{sid} = {lit}", _is(results, sid, lit)


def c4(results, scs):
    yield "S_X(F) = 99/52", _is(results, "beth.node.S_X", "99/52")
    yield "beta(F) = 5/52", _is(results, "beth.node.betaF", "5/52")
    yield "S(W;f) = 29/52", _is(results, "beth.node.f.S_W2", "29/52")
    yield "three-stage schedule verifies", _match(results, "beth.node.schedule")
    computed, _ = _value(results, "beth.node.integrands")
    literal = ["26-2*u^3", "24+6*u-6*u^2", "6*(2-u)*(4-u)"]
    for k, (got, want) in enumerate(zip(computed, literal)):
        yield f"integrand {k + 1} is {want} (computed {got})", parse_poly(got) == parse_poly(want)


def c5(results, scs):
    yield "beta(F) = 1/26", _is(results, "beth.line.betaF", "1/26")
    yield "S~ integral = 49/104", _is(results, "beth.line.S~.integral", "49/104")
    yield "S(W^F;Z) = 2/13 ord + 33/104", _is(results, "beth.line.F-flag.S_W2", "2/13*ord + 33/104")
    yield "S(W;Z) = (49 ord + 51)/104", _is(results, "beth.line.S~-flag.S_W2", "49/104*ord + 51/104")
    yield "49/54 reading is flagged", results["beth.line.S~.restated"].verdict == "flagged"


def c6(results, scs):
    yield "S(W^S;Z) = 3/4 (two nodes)", _is(results, "aleph.two-nodes.Z.S_W2", "3/4")
    yield "beta(S) = 3/52 (non-isolated)", _is(results, "aleph.non-isolated.betaS", "3/52")


def c7(results, scs):
    first = enumerate_classification(scs["git1.table"].suite.action("first"))
    second = enumerate_classification(scs["git2.table"].suite.action("second"))
    S = StabilityClass
    yield "first table matches", _match(results, "git1.table")
    yield "first: four unstable patterns up to symmetry, eight supports", len(first.supports(S.UNSTABLE)) == 8
    four = {"beta", "gamma", "delta", "epsilon"}
    yield "first: stable iff beta, gamma, delta, epsilon nonzero", all(
        (r.verdict is S.STABLE) == (four <= set(r.names)) for r in first.rows)
    yield "first: value-dependent strata annotated", sorted(r.names for r in first.rows if r.note) == [
        ("alpha", "beta", "epsilon"), ("alpha", "gamma", "delta")]
    yield "second table matches", _match(results, "git2.table")
    ok = True
    for r in second.rows:
        n = set(r.names)
        unstable = "alpha" not in n or not n & {"p_be", "p_gd"} or not n & {"m_be", "m_gd"}
        ok &= (r.verdict is S.UNSTABLE) == unstable and (unstable or r.verdict is S.STABLE)
    yield "second: unstable iff alpha or an eigen-pair absent, else stable", ok
    counts = second.counts()
    yield "second: no strictly semistable rows", counts["SemistableNotPolystable"] + counts["PolystableNotStable"] == 0


def c8(results, scs):
    first, _ = _value(results, "git1.invariants")
    second, _ = _value(results, "git2.invariants")
    yield "first: {alpha^2, beta*epsilon, gamma*delta}", sorted(first) == ["alpha^2", "beta*epsilon", "gamma*delta"]
    yield "second: nine generators", len(second) == 9 and _match(results, "git2.invariants")


def c9(results, scs):
    for sid in ("beth.discriminant", "aleph.discriminant", "aleph.discriminant.double"):
        yield f"{sid} proportional", _match(results, sid)


def c10(results, scs):
    jac = sorted(sid for sid, sc in scs.items() if sc.kind == "jacobian")
    sing = [s for s in jac if ".sing." in s]
    generic = [s for s in jac if ".smooth." in s]
    yield f"{len(sing)} singular points drop rank", all(_match(results, s) and results[s].computed < 3 for s in sing)
    yield "one generic smooth point per family", {s.split(".")[0] for s in generic} == {"beth", "aleph"} and all(
        _match(results, s) and results[s].computed == 3 for s in generic)


def c11(results, scs):
    for source, name in test_zariski.DECLARED:
        sc = next(s for s in scs.values() if s.source == source)
        flag = sc.suite.flag(name)
        computed = surface_schedule(flag)
        yield f"{source}:{name} reproduced", schedules_identical(computed, flag.declared) and not check_declared(flag, computed)


PROPERTY_TESTS = [
    ("rational field axioms", test_exact.test_field_axioms),
    ("integral additivity", test_exact.test_piecewise_integral_additivity),
    ("triple form multilinear and symmetric", test_lattice.test_triple_form_symmetric_and_multilinear),
    ("pair form bilinear and symmetric", test_lattice.test_pair_form_symmetric_and_bilinear),
    ("Zariski post-conditions", test_zariski.test_zariski_properties),
    ("GIT partition and invariances", test_git.test_classes_partition_invariances_and_monotonicity),
    ("report determinism across thread counts", test_cli.test_report_is_deterministic_across_jobs),
]


def c12(results, scs):
    reference = Report(tuple(results[k] for k in sorted(results)))
    for label, fn in PROPERTY_TESTS:
        n = getattr(fn, "_hypothesis_internal_use_settings", settings.default).max_examples
        outcome = conftest.OUTCOMES.get(f"{fn.__name__}")
        if outcome is None:
            # run on its own: execute the property here
            try:
                fn(reference) if fn is test_cli.test_report_is_deterministic_across_jobs else fn()
                outcome = "passed"
            except Exception:
                outcome = "failed"
        yield f"{label}: {n} examples, {outcome}", n >= 1000 and outcome == "passed"


CRITERIA = [
    (1, "K-unstable beta", c1),
    (2, "divisorial S-integrals", c2),
    (3, "delta bound chain", c3),
    (4, "node blow-up", c4),
    (5, "line blow-up", c5),
    (6, "aleph flags", c6),
    (7, "GIT tables", c7),
    (8, "invariant monomials", c8),
    (9, "discriminants", c9),
    (10, "Jacobian ranks", c10),
    (11, "declared surface schedules", c11),
    (12, "property suites", c12),
]


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"criterion-{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, check, results, all_scenarios, capsys):
    checks = list(check(results, all_scenarios))
    failed = [label for label, ok in checks if not ok]
    with capsys.disabled():
        status = "PASS" if not failed else "FAIL"
        print(f"\n[{status}] criterion {number:>2}: {title} ({len(checks) - len(failed)}/{len(checks)} checks)", end="")
        for label in failed:
            print(f"\n         failed: {label}", end="")
        print()
    assert not failed, failed
