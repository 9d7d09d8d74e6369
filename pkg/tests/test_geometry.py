import json
from fractions import Fraction

import pytest
import sympy
from hypothesis import given

from conftest import SCENARIOS, rngs
from kstab.exact import Poly, parse_poly
from kstab.geometry import (
    GeometryError,
    PolySystem,
    QuadraticForm,
    conic_fiber_form,
    discriminant,
    full_jacobian_rank,
    gradient_at,
    jacobian_rank_at,
    proportional,
    quadric_rank_at,
    singular_kernel,
    span_contains,
)

DATA = json.loads((SCENARIOS / "quadrics.json").read_text())
XS = ["x", "y", "z", "t", "w"]
BETH = QuadraticForm.from_poly(DATA["quadrics"]["beth"], XS)
ALEPH = QuadraticForm.from_poly(DATA["quadrics"]["aleph"], XS)
FIBRE = {"x": "v1*p", "y": "u1*p", "z": "v2*q", "t": "u2*q", "w": "w"}
BASE = ["u1", "v1", "u2", "v2"]
SYMS = {n: sympy.Symbol(n) for n in XS + BASE + ["p", "q", "a", "b", "r", "s"]}


def sym(text):
    return sympy.sympify(str(text).replace("^", "**"), locals=SYMS)


def sym_matrix(text, variables):
    """Gram matrix of a quadratic form, halving the Hessian."""
    f = sym(text)
    vs = [SYMS[v] for v in variables]
    return sympy.Matrix([[sympy.diff(f, a, b) / 2 for b in vs] for a in vs])


def _system(name, params):
    s = DATA["systems"][name]
    return PolySystem.parse(s["equations"], s["factors"], params)


def _jacobian_inputs():
    return [s for s in DATA["scenarios"] if s["kind"] == "jacobian"]


# quadric rank

BETH_DET = sympy.factor(sym_matrix(DATA["quadrics"]["beth"], XS).det())
GRID = [Fraction(n, 2) for n in range(-6, 7)]


def test_beth_determinant_factors_through_the_four_lines():
    a, b = SYMS["a"], SYMS["b"]
    lines = (a + b + 1) * (a + b - 1) * (a - b + 1) * (a - b - 1)
    assert sympy.simplify(BETH_DET / lines).is_constant()


def test_rank_drops_exactly_where_determinant_vanishes():
    for a in GRID:
        for b in GRID:
            det = BETH_DET.subs({SYMS["a"]: sympy.Rational(a), SYMS["b"]: sympy.Rational(b)})
            rank = quadric_rank_at(BETH, {"a": a, "b": b})
            assert (rank < 5) == (det == 0), (a, b)


def test_aleph_rank_drops_on_r_equals_plus_minus_s():
    for r in GRID:
        for s in GRID:
            if r == s == 0:
                continue
            rank = quadric_rank_at(ALEPH, {"r": r, "s": s})
            assert (rank < 5) == (r == s or r == -s), (r, s)


GRADIENT = [BETH.to_poly().diff(v) for v in XS]


@given(rngs)
def test_kernel_vectors_kill_the_gradient(r):
    # a point on one of the singular lines a +- b +- 1 = 0, or a generic point
    a = Fraction(r.randint(-20, 20), r.randint(1, 6))
    e1, e2 = r.choice((1, -1)), r.choice((1, -1))
    b = e1 * (e2 - a) if r.random() < 0.8 else Fraction(r.randint(-20, 20), r.randint(1, 6))
    params = {"a": a, "b": b}
    m = BETH.specialize(params)
    ker = m.kernel()
    assert len(ker) == 5 - m.rank()
    for vec in ker:
        env = dict(params, **dict(zip(XS, vec)))
        assert all(g.evaluate(env) == 0 for g in GRADIENT)


def test_singular_kernel_of_the_vertex():
    assert singular_kernel(BETH, {"a": 2, "b": -1}) == [tuple(Fraction(x) for x in (1, 1, 1, 1, 0))]
    assert singular_kernel(BETH, {"a": 0, "b": 0}) == []


def test_quadratic_form_round_trip():
    assert BETH.to_poly() == parse_poly(DATA["quadrics"]["beth"])
    assert BETH.matrix[0, 1] == parse_poly("1/2")


def test_span_contains():
    assert span_contains([(1, 0, 1, 0, 0), (0, 1, 0, 1, 0)], (1, 1, 1, 1, 0))
    assert not span_contains([(1, 0, 1, 0, 0)], (0, 1, 0, 1, 0))
    assert span_contains([], (0, 0))


def test_non_quadratic_input_is_rejected():
    with pytest.raises(GeometryError):
        QuadraticForm.from_poly("x^3 + y^2", ["x", "y"])
    with pytest.raises(GeometryError):
        quadric_rank_at(BETH, {"a": 1})


# Jacobian criterion

@pytest.mark.parametrize("sc", _jacobian_inputs(), ids=lambda s: s["id"])
def test_jacobian_rank_agrees_with_full_jacobian(sc):
    sys = _system(sc["inputs"]["system"], sc["inputs"]["params"])
    pt = tuple(tuple(Fraction(x) for x in f) for f in sc["inputs"]["point"])
    rank = jacobian_rank_at(sys, pt)
    assert rank == sc["expected"]
    # the Euler relation makes the dropped chart columns redundant
    assert rank == full_jacobian_rank(sys, pt)


JAC = [(_system(s["inputs"]["system"], s["inputs"]["params"]),
        tuple(tuple(Fraction(x) for x in f) for f in s["inputs"]["point"]),
        s["expected"]) for s in _jacobian_inputs()]


@given(rngs)
def test_jacobian_rank_is_invariant_under_rescaling(r):
    sys, pt, rank = r.choice(JAC)
    scaled = []
    for f in pt:
        lam = Fraction(r.choice((1, -1)) * r.randint(1, 30), r.randint(1, 30))
        scaled.append(tuple(c * lam for c in f))
    scaled = tuple(scaled)
    assert jacobian_rank_at(sys, scaled) == rank


def test_point_off_the_variety_is_rejected():
    sys = _system("beth", {"a": 2, "b": -1})
    with pytest.raises(GeometryError):
        jacobian_rank_at(sys, ((1, 1), (1, 1), (1, 0, 0, 0, 0)))
    with pytest.raises(GeometryError):
        jacobian_rank_at(sys, ((0, 0), (1, 1), (1, 1, 1, 1, 0)))


# conic bundle discriminants

def _sym_discriminant(name, params=None):
    f = sym(DATA["quadrics"][name]).subs({SYMS[k]: sym(v) for k, v in FIBRE.items()}, simultaneous=True)
    det = sym_matrix(str(sympy.expand(f)), ["p", "q", "w"]).det()
    if params:
        det = det.subs({SYMS[k]: v for k, v in params.items()})
    return sympy.expand(det)


def _lib_discriminant(name):
    return discriminant(conic_fiber_form(DATA["quadrics"][name], FIBRE, ["p", "q", "w"]))


def _to_sym(p):
    return sym(str(p).replace("**", "^"))


def test_beth_discriminant_matches_sympy_and_expected():
    got = _lib_discriminant("beth")
    assert sympy.expand(_to_sym(got) - _sym_discriminant("beth")) == 0
    expected = next(s["expected"] for s in DATA["scenarios"] if s["id"] == "beth.discriminant")
    assert proportional(got, parse_poly(expected))


def test_aleph_discriminant_splits():
    got = _lib_discriminant("aleph")
    assert sympy.expand(_to_sym(got) - _sym_discriminant("aleph")) == 0
    expected = next(s["expected"] for s in DATA["scenarios"] if s["id"] == "aleph.discriminant")
    assert proportional(got, parse_poly(expected))


D1 = "(r-s+1)*u1*u2+(r-s-1)*u1*v2+(r-s-1)*u2*v1+(r-s+1)*v1*v2"
D2 = "(r+s-1)*u1*u2+(r+s+1)*u1*v2+(r+s+1)*u2*v1+(r+s-1)*v1*v2"


def test_aleph_factors_coincide_only_at_zero_one():
    for r, s in [(0, 1), (1, 3), (2, 1), (1, 0)]:
        env = {"r": Fraction(r), "s": Fraction(s)}
        same = proportional(parse_poly(D1).substitute(env), parse_poly(D2).substitute(env))
        assert same == ((r, s) == (0, 1))


@pytest.mark.parametrize("a,b,vanishes", [
    (2, -3, True), (2, -1, True), ("1/3", "2/3", True), (0, -1, True),
    ("1/3", "1/5", False), (2, 3, False), (2, 1, False),
])
def test_discriminant_gradient_at_diagonal_point(a, b, vanishes):
    # the gradient vanishes at ([1:1],[1:1]) exactly when a + b +- 1 = 0
    delta = _lib_discriminant("beth").substitute({"a": Fraction(a), "b": Fraction(b)})
    grad = gradient_at(delta, {"u1": 1, "v1": 1, "u2": 1, "v2": 1})
    assert all(g == 0 for g in grad) == vanishes
    ab = Fraction(a) + Fraction(b)
    assert vanishes == (ab in (1, -1))


def test_linear_image_required_for_fibre():
    with pytest.raises(GeometryError):
        conic_fiber_form("x^2", {"x": "p^2"}, ["p", "q"])


def test_proportional():
    assert proportional(parse_poly("2*x+4*y"), parse_poly("-x-2*y"))
    assert not proportional(parse_poly("x+y"), parse_poly("x-y"))
    assert proportional(Poly(), Poly())
    assert not proportional(Poly(), parse_poly("x"))
