"""Hilbert-Mumford stability for diagonal torus actions of rank at most 2."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .exact import Poly, Q, RatMatrix, eval_rational, parse_poly

MAX_COORDS = 20
VALUE_DEPENDENT = "value-dependent sub-strata, see quotient_coords"


class GitError(ValueError):
    """Raised for invalid actions, supports or maps."""


class StabilityClass(str, enum.Enum):
    UNSTABLE = "Unstable"
    STABLE = "Stable"
    POLYSTABLE_NOT_STABLE = "PolystableNotStable"
    SEMISTABLE_NOT_POLYSTABLE = "SemistableNotPolystable"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TorusAction:
    coords: tuple[str, ...]
    weights: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.coords) != len(self.weights):
            raise GitError("one weight vector per coordinate is required")
        if len(set(self.coords)) != len(self.coords):
            raise GitError("duplicate coordinate names")
        dims = {len(w) for w in self.weights}
        if len(dims) > 1:
            raise GitError("weight vectors have different lengths")
        if dims and dims.pop() > 2:
            raise GitError("only tori of rank at most 2 are supported")
        object.__setattr__(self, "weights", tuple(tuple(int(x) for x in w) for w in self.weights))

    @property
    def rank(self) -> int:
        return len(self.weights[0]) if self.weights else 0

    def support(self, names: Iterable) -> tuple[int, ...]:
        out = set()
        for n in names:
            if isinstance(n, int):
                if not 0 <= n < len(self.coords):
                    raise GitError(f"coordinate index {n} out of range")
                out.add(n)
            elif n in self.coords:
                out.add(self.coords.index(n))
            else:
                raise GitError(f"unknown coordinate {n!r}")
        if not out:
            raise GitError("support must be nonempty")
        return tuple(sorted(out))


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull(points: Sequence[tuple]) -> list[tuple]:
    """Counter-clockwise convex hull by Andrew's monotone chain."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _pad(w: tuple[int, ...]) -> tuple[int, int]:
    return tuple(list(w) + [0] * (2 - len(w)))  # type: ignore[return-value]


def _affine_dim(points: Sequence[tuple]) -> int:
    base = points[0]
    diffs = [[p[0] - base[0], p[1] - base[1]] for p in points[1:]]
    return RatMatrix.of(diffs).rank() if diffs else 0


def _linear_rank(points: Sequence[tuple]) -> int:
    return RatMatrix.of([list(p) for p in points]).rank()


def _position(points: Sequence[tuple]) -> str:
    """Where the origin sits relative to the hull: 'outside', 'boundary' or 'relint'."""
    pts = sorted(set(points))
    k = _affine_dim(pts)
    if k == 0:
        return "relint" if pts[0] == (0, 0) else "outside"
    if k == 1:
        a, b = pts[0], pts[-1]
        if _cross(a, b, (0, 0)) != 0:
            return "outside"
        # project onto the segment direction
        d = (b[0] - a[0], b[1] - a[1])
        t = Fraction(-(a[0] * d[0] + a[1] * d[1]), d[0] * d[0] + d[1] * d[1])
        if t < 0 or t > 1:
            return "outside"
        return "relint" if 0 < t < 1 else "boundary"
    hull = _hull(pts)
    signs = [_cross(p, q, (0, 0)) for p, q in zip(hull, hull[1:] + hull[:1])]
    if any(s < 0 for s in signs):
        return "outside"
    return "relint" if all(s > 0 for s in signs) else "boundary"


def classify(action: TorusAction, support: Iterable) -> StabilityClass:
    idx = action.support(support)
    pts = [_pad(action.weights[i]) for i in idx]
    pos = _position(pts)
    if pos == "outside":
        return StabilityClass.UNSTABLE
    if pos == "boundary":
        return StabilityClass.SEMISTABLE_NOT_POLYSTABLE
    full = _affine_dim(sorted(set(pts))) == action.rank
    if full and _linear_rank(pts) == action.rank:
        return StabilityClass.STABLE
    return StabilityClass.POLYSTABLE_NOT_STABLE


def annotation(action: TorusAction, support: Iterable) -> str:
    """Flag polystable supports whose quotient image has positive dimension."""
    idx = action.support(support)
    if classify(action, idx) is not StabilityClass.POLYSTABLE_NOT_STABLE:
        return ""
    r = _linear_rank([_pad(action.weights[i]) for i in idx])
    return VALUE_DEPENDENT if len(idx) - r >= 2 else ""


@dataclass(frozen=True)
class ClassificationRow:
    support: tuple[int, ...]
    names: tuple[str, ...]
    verdict: StabilityClass
    note: str = ""


@dataclass(frozen=True)
class ClassificationTable:
    action: TorusAction
    rows: tuple[ClassificationRow, ...]

    def counts(self) -> dict[str, int]:
        out = {c.value: 0 for c in StabilityClass}
        for r in self.rows:
            out[r.verdict.value] += 1
        return out

    def supports(self, verdict: StabilityClass) -> list[tuple[str, ...]]:
        return [r.names for r in self.rows if r.verdict is verdict]

    def render(self) -> str:
        width = max((len(",".join(r.names)) for r in self.rows), default=7)
        lines = [f"{'support':<{width}}  verdict"]
        for r in self.rows:
            note = f"  ({r.note})" if r.note else ""
            lines.append(f"{','.join(r.names):<{width}}  {r.verdict.value}{note}")
        lines.append("counts: " + ", ".join(f"{k}={v}" for k, v in self.counts().items()))
        return "\n".join(lines)


def enumerate_classification(action: TorusAction) -> ClassificationTable:
    n = len(action.coords)
    if n > MAX_COORDS:
        raise GitError(f"{n} coordinates exceed the enumeration limit of {MAX_COORDS}")
    rows = []
    for size in range(1, n + 1):
        for idx in combinations(range(n), size):
            rows.append(ClassificationRow(idx, tuple(action.coords[i] for i in idx),
                                          classify(action, idx), annotation(action, idx)))
    return ClassificationTable(action, tuple(rows))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def invariant_monomials(action: TorusAction, max_degree: int, exact_degree: bool = False) -> list[tuple[int, ...]]:
    """Exponent vectors of weight zero with total degree <= max_degree (or == with exact_degree)."""
    if max_degree < 1:
        raise GitError("max_degree must be at least 1")
    n = len(action.coords)
    degrees = [max_degree] if exact_degree else range(1, max_degree + 1)
    out = []
    for deg in degrees:
        for e in _compositions(deg, n):
            if all(sum(x * w[k] for x, w in zip(e, action.weights)) == 0 for k in range(action.rank)):
                out.append(e)
    return out


def format_monomial(coords: Sequence[str], exps: Sequence[int]) -> str:
    parts = [c if e == 1 else f"{c}^{e}" for c, e in zip(coords, exps) if e]
    return "*".join(parts) or "1"


def normalize_projective(point: Sequence) -> tuple[Fraction, ...]:
    """Primitive integer representative with first nonzero coordinate positive."""
    pt = [Q(x) for x in point]
    nz = [x for x in pt if x]
    if not nz:
        raise GitError("all coordinates vanish")
    den = 1
    for x in pt:
        den = lcm(den, x.denominator)
    ints = [int(x * den) for x in pt]
    g = 0
    for x in ints:
        g = gcd(g, x)
    sign = 1 if nz[0] > 0 else -1
    return tuple(Fraction(sign * x // g) for x in ints)


def quotient_coords(components: Sequence, coords: Sequence[str], point: Sequence,
                    degrees: Sequence[int] | None = None) -> tuple[Fraction, ...]:
    """Evaluate a map given by polynomials.

    For an ordinary projective target the result is normalized; in a weighted
    target the raw values are returned and compared with projective_equal.
    """
    polys = [c if isinstance(c, Poly) else parse_poly(str(c)) for c in components]
    if len(point) != len(coords):
        raise GitError("point and coordinate list differ in length")
    env = {c: Q(x) for c, x in zip(coords, point)}
    vals = [p.evaluate(env) for p in polys]
    if not any(vals):
        raise GitError("all map components vanish at the point")
    if degrees is not None and any(d != 1 for d in degrees):
        if len(degrees) != len(vals):
            raise GitError("degrees and map components differ in length")
        return tuple(vals)
    return normalize_projective(vals)


def projective_equal(p: Sequence, q: Sequence, degrees: Sequence[int] | None = None) -> bool:
    """Equality in (weighted) projective space."""
    p, q = [Q(x) for x in p], [Q(x) for x in q]
    if len(p) != len(q) or [bool(x) for x in p] != [bool(x) for x in q]:
        return False
    degrees = list(degrees) if degrees is not None else [1] * len(p)
    ratios = [(x / y, d) for x, y, d in zip(p, q, degrees) if y]
    if not ratios:
        return False
    return all(r1 ** d2 == r2 ** d1 for (r1, d1), (r2, d2) in combinations(ratios, 2))


def act(action: TorusAction, torus: Sequence, point: Sequence) -> tuple[Fraction, ...]:
    """Image of a point under the torus element t: coordinate i scales by t^w_i."""
    out = []
    for w, x in zip(action.weights, point):
        f = Fraction(1)
        for t, e in zip(torus, w):
            f *= Q(t) ** e
        out.append(f * Q(x))
    return tuple(out)


def verify_action_samples(template: Sequence[Sequence[str]], basis_change: RatMatrix,
                          claimed: Sequence[tuple], samples: Sequence[tuple],
                          names: tuple[str, str] = ("l", "m")) -> bool:
    """Check that B M(l, m) B^-1 is diagonal with the claimed characters.

    ``claimed`` holds one (coefficient, (a, b)) per new coordinate, meaning
    coefficient * l^a * m^b, up to one scalar per sample.
    """
    if basis_change.det() == 0:
        raise GitError("basis change is not invertible")
    inv = basis_change.inverse()
    for sample in samples:
        vals = {n: Q(x) for n, x in zip(names, sample)}
        if any(v == 0 for v in vals.values()):
            raise GitError("samples must be nonzero")
        m = RatMatrix.of([[eval_rational(str(e), vals) for e in row] for row in template])
        c = basis_change * m * inv
        n = c.nrows
        if any(c[i, j] != 0 for i in range(n) for j in range(n) if i != j):
            return False
        ratio = None
        for i, (coef, (a, b)) in enumerate(claimed):
            expect = Q(coef) * vals[names[0]] ** a * vals[names[1]] ** b
            if expect == 0:
                return False
            r = c[i, i] / expect
            if ratio is None:
                ratio = r
            elif r != ratio:
                return False
    return True


def action_from_mapping(weights: Mapping[str, Sequence[int]]) -> TorusAction:
    return TorusAction(tuple(weights), tuple(tuple(w) for w in weights.values()))
