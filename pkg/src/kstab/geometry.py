"""Quadrics, Jacobian checks on multiprojective complete intersections and
conic-bundle discriminants.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .exact import Poly, Q, RatMatrix, parse_poly


class GeometryError(ValueError):
    """Raised for malformed geometric input."""


@dataclass(frozen=True)
class QuadraticForm:
    """Symmetric matrix M with q(x) = x^T M x; a cross term c x_i x_j puts c/2 in M_ij."""

    variables: tuple[str, ...]
    matrix: RatMatrix

    def __post_init__(self):
        n = len(self.variables)
        if self.matrix.nrows != n or self.matrix.ncols != n:
            raise GeometryError("matrix size does not match the variables")
        if self.matrix.transpose() != self.matrix:
            raise GeometryError("quadratic form matrix is not symmetric")

    @classmethod
    def from_poly(cls, q: Poly | str, variables: Sequence[str]) -> "QuadraticForm":
        q = parse_poly(q) if isinstance(q, str) else q
        variables = tuple(variables)
        n = len(variables)
        m = [[Poly() for _ in range(n)] for _ in range(n)]
        for mono, c in q.terms.items():
            inside = [(v, e) for v, e in mono if v in variables]
            if sum(e for _, e in inside) != 2:
                raise GeometryError(f"{q} is not quadratic in {variables}")
            rest = Poly({tuple((v, e) for v, e in mono if v not in variables): c})
            if len(inside) == 1:
                i = variables.index(inside[0][0])
                m[i][i] = m[i][i] + rest
            else:
                i, j = (variables.index(v) for v, _ in inside)
                half = rest.scale(Fraction(1, 2))
                m[i][j] = m[i][j] + half
                m[j][i] = m[j][i] + half
        return cls(variables, RatMatrix.of(m))

    @property
    def parameters(self) -> tuple[str, ...]:
        return tuple(sorted({v for r in self.matrix.rows for e in r
                             for v in Poly.lift(e).variables}))

    def specialize(self, params: Mapping[str, object]) -> RatMatrix:
        missing = [p for p in self.parameters if p not in params]
        if missing:
            raise GeometryError(f"missing parameter value(s) {missing}")
        vals = {k: Q(v) for k, v in params.items()}
        return self.matrix.map(lambda e: Poly.lift(e).evaluate(vals))

    def to_poly(self) -> Poly:
        xs = [Poly.var(v) for v in self.variables]
        total = Poly()
        for i, xi in enumerate(xs):
            for j, xj in enumerate(xs):
                total = total + Poly.lift(self.matrix[i, j]) * xi * xj
        return total


def quadric_rank_at(q: QuadraticForm, params: Mapping[str, object]) -> int:
    return q.specialize(params).rank()


def singular_kernel(q: QuadraticForm, params: Mapping[str, object]) -> list[tuple[Fraction, ...]]:
    """Kernel basis of the specialized matrix; empty for a nondegenerate form."""
    return q.specialize(params).kernel()


def span_contains(basis: Sequence[Sequence], vec: Sequence) -> bool:
    base = RatMatrix.of([list(b) for b in basis]) if basis else None
    if base is None:
        return all(Q(x) == 0 for x in vec)
    return RatMatrix.of([list(b) for b in basis] + [list(vec)]).rank() == base.rank()


ProjPoint = tuple[tuple[Fraction, ...], ...]


@dataclass(frozen=True)
class PolySystem:
    """Equations on a product of projective spaces, one variable group per factor."""

    equations: tuple[Poly, ...]
    factors: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        names = [v for f in self.factors for v in f]
        if len(set(names)) != len(names):
            raise GeometryError("a variable appears in two factors")

    @classmethod
    def parse(cls, equations: Sequence[str], factors: Sequence[Sequence[str]],
              params: Mapping[str, object] | None = None) -> "PolySystem":
        env = {k: Q(v) for k, v in (params or {}).items()}
        return cls(tuple(parse_poly(e, env) for e in equations), tuple(tuple(f) for f in factors))

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for f in self.factors for v in f)

    def point_env(self, pt: ProjPoint) -> dict[str, Fraction]:
        if len(pt) != len(self.factors):
            raise GeometryError("point has the wrong number of factors")
        env = {}
        for names, coords in zip(self.factors, pt):
            if len(names) != len(coords):
                raise GeometryError("factor coordinates have the wrong length")
            if not any(Q(c) for c in coords):
                raise GeometryError("a projective factor is identically zero")
            env.update({n: Q(c) for n, c in zip(names, coords)})
        return env

    def on_variety(self, pt: ProjPoint) -> bool:
        env = self.point_env(pt)
        return all(e.evaluate(env) == 0 for e in self.equations)


def full_jacobian_rank(sys: PolySystem, pt: ProjPoint) -> int:
    env = sys.point_env(pt)
    rows = [[e.diff(v).evaluate(env) for v in sys.variables] for e in sys.equations]
    return RatMatrix.of(rows).rank()


def jacobian_rank_at(sys: PolySystem, pt: ProjPoint) -> int:
    """Rank of the Jacobian in the affine chart fixed by the point's nonzero coordinates."""
    if not sys.on_variety(pt):
        raise GeometryError("point does not lie on the variety")
    env = sys.point_env(pt)
    chart: dict[str, Fraction] = {}
    free: list[str] = []
    for names, coords in zip(sys.factors, pt):
        coords = [Q(c) for c in coords]
        k = next(i for i, c in enumerate(coords) if c)
        for i, n in enumerate(names):
            chart[n] = coords[i] / coords[k]
            if i != k:
                free.append(n)
    del env
    rows = []
    for e in sys.equations:
        rows.append([e.diff(v).evaluate(chart) for v in free])
    return RatMatrix.of(rows).rank()


def conic_fiber_form(quadric: Poly | str, substitution: Mapping[str, str | Poly],
                     fiber: Sequence[str] = ("s", "r", "w")) -> QuadraticForm:
    """Substitute the ambient coordinates and read the form in the fiber coordinates."""
    q = parse_poly(quadric) if isinstance(quadric, str) else quadric
    images = {k: parse_poly(v) if isinstance(v, str) else v for k, v in substitution.items()}
    for name, img in images.items():
        for mono in img.terms:
            if sum(e for v, e in mono if v in fiber) != 1:
                raise GeometryError(f"image of {name} is not linear in the fiber coordinates")
    return QuadraticForm.from_poly(q.substitute(images), fiber)


def discriminant(form: QuadraticForm) -> Poly:
    return Poly.lift(form.matrix.map(Poly.lift).det())


def proportional(p: Poly, q: Poly) -> bool:
    """True iff p = c q for a nonzero rational c."""
    p, q = Poly.lift(p), Poly.lift(q)
    if p.is_zero() or q.is_zero():
        return p.is_zero() and q.is_zero()
    mp, cp = p.leading_term()
    mq, cq = q.leading_term()
    if mp != mq:
        return False
    return p.scale(cq) == q.scale(cp)


def gradient_at(p: Poly, point: Mapping[str, object]) -> tuple[Fraction, ...]:
    vals = {k: Q(v) for k, v in point.items()}
    return tuple(p.diff(v).evaluate(vals) for v in sorted(vals))
