"""Surface Zariski decompositions: the active-set algorithm, parametric
schedules in one or two parameters, schedule verification and
pseudoeffective thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .exact import (
    ExactError,
    PiecewisePoly,
    Poly,
    Q,
    RatMatrix,
    count_real_roots,
    germ_sign,
    nonnegative_on,
    rational_roots,
    univariate,
)
from .lattice import (
    CurveFunctional,
    DivisorPath,
    SurfaceLattice,
    ThreefoldLattice,
    cube,
    curve_pair,
    pair_eval,
)


class ZariskiError(ValueError):
    """Base class for decomposition failures."""


class NotPseudoEffective(ZariskiError):
    """The divisor is not pseudoeffective relative to the pool."""


class NotNegativeDefinite(ZariskiError):
    """An active set has a Gram matrix that is not negative definite."""


class IrrationalBreakpoint(ZariskiError):
    """A breakpoint of the schedule is not rational."""


@dataclass(frozen=True)
class NegativeCurvePool:
    """Curves allowed in negative parts, plus nef-only test curves.

    Test curves have nonnegative self-intersection; they never enter N but a
    negative pairing with one of them certifies non-pseudoeffectivity.
    """

    surface: SurfaceLattice
    candidates: tuple[tuple[str, tuple[Fraction, ...]], ...]
    tests: tuple[tuple[str, tuple[Fraction, ...]], ...] = ()

    @classmethod
    def build(cls, surface: SurfaceLattice, candidates: Sequence[str],
              tests: Sequence[str] = (), classes: Mapping[str, str] | None = None) -> "NegativeCurvePool":
        classes = dict(classes or {})

        def vec(name):
            text = classes.get(name, name)
            path = DivisorPath.parse(text, surface.basis)
            if path.variables:
                raise ZariskiError(f"pool class {name!r} must be constant")
            return path.constant_vector()

        return cls(surface, tuple((n, vec(n)) for n in candidates), tuple((n, vec(n)) for n in tests))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.candidates)

    def vector(self, name: str) -> tuple[Fraction, ...]:
        for n, v in self.candidates + self.tests:
            if n == name:
                return v
        raise ZariskiError(f"{name!r} is not in the pool")

    def path(self, name: str) -> DivisorPath:
        return DivisorPath.from_vector(self.surface.basis, self.vector(name))

    def dual(self, name: str) -> tuple[Fraction, ...]:
        """Gram matrix times the class vector, cached per curve."""
        cache = self.__dict__.setdefault("_duals", {})
        if name not in cache:
            v = self.vector(name)
            g = self.surface.gram
            cache[name] = tuple(sum((g[i, j] * v[j] for j in range(len(v)) if v[j]), Fraction(0))
                                for i in range(len(v)))
        return cache[name]

    def dot(self, d: DivisorPath, name: str) -> Poly:
        total = Fraction(0)
        for c, w in zip(d.coeffs, self.dual(name)):
            if w and not c.is_zero():
                total = total + (c.constant_value() * w if c.is_constant() else c.scale(w))
        return Poly.lift(total)


@dataclass(frozen=True)
class Decomposition:
    P: DivisorPath
    N: tuple[tuple[str, Poly], ...]

    @property
    def active(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.N)

    def n_dict(self) -> dict[str, Poly]:
        return dict(self.N)

    def negative_part(self, pool: NegativeCurvePool) -> DivisorPath:
        out = DivisorPath.zero(pool.surface.basis)
        for n, c in self.N:
            out = out + pool.path(n).scale(c)
        return out


def negative_definite(m: RatMatrix) -> bool:
    """Sylvester's criterion applied to -m."""
    n = m.nrows
    neg = m.map(lambda e: -e)
    return all(neg.submatrix(range(k), range(k)).det() > 0 for k in range(1, n + 1))


def _gram(pool: NegativeCurvePool, active: Sequence[str]) -> RatMatrix:
    vs = [pool.vector(a) for a in active]
    return RatMatrix.of([[pool.surface.dot(x, y) for y in vs] for x in vs])


def solve_active(pool: NegativeCurvePool, d: DivisorPath, active: Sequence[str]) -> Decomposition:
    """Solve for N supported on ``active`` with P orthogonal to every active curve."""
    if not active:
        return Decomposition(d, ())
    cache = pool.__dict__.setdefault("_inverses", {})
    key = tuple(active)
    if key not in cache:
        g = _gram(pool, active)
        cache[key] = g.inverse() if negative_definite(g) else None
    inv = cache[key]
    if inv is None:
        raise NotNegativeDefinite(f"Gram matrix of {list(active)} is not negative definite")
    rhs = [pool.dot(d, a) for a in active]
    coeffs = []
    for i in range(len(active)):
        acc = Poly()
        for j, r in enumerate(rhs):
            if inv[i, j]:
                acc = acc + r.scale(inv[i, j])
        coeffs.append(acc)
    n_part = DivisorPath.zero(d.basis)
    for a, c in zip(active, coeffs):
        n_part = n_part + pool.path(a).scale(c)
    return Decomposition(d - n_part, tuple(zip(active, coeffs)))


Sign = Callable[[Poly], int]


def _constant_sign(p: Poly) -> int:
    if not p.is_constant():
        raise ZariskiError(f"expected a numeric divisor, got coefficient {p}")
    c = p.constant_value()
    return (c > 0) - (c < 0)


def _decompose(pool: NegativeCurvePool, d: DivisorPath, sign: Sign) -> Decomposition:
    active: list[str] = []
    dec = Decomposition(d, ())
    for _ in range(len(pool.candidates) + 1):
        if active:
            try:
                dec = solve_active(pool, d, active)
            except NotNegativeDefinite:
                # negative curves only: a pseudoeffective D never grows such a set
                if all(pool.surface.dot(pool.vector(a), pool.vector(a)) < 0 for a in active):
                    raise NotPseudoEffective(f"active set {active} is not negative definite") from None
                raise
            for n, c in dec.N:
                if sign(c) < 0:
                    raise NotPseudoEffective(f"negative coefficient {c} on {n}")
        new = [n for n in pool.names if n not in active and sign(pool.dot(dec.P, n)) < 0]
        if not new:
            break
        active.extend(new)
    else:
        raise ZariskiError("active set did not stabilise")
    for n, _ in pool.tests:
        if sign(pool.dot(dec.P, n)) < 0:
            raise NotPseudoEffective(f"positive part is negative on test curve {n}")
    _self_check(pool, d, dec, sign)
    return dec


def _self_check(pool: NegativeCurvePool, d: DivisorPath, dec: Decomposition, sign: Sign) -> None:
    if dec.P + dec.negative_part(pool) != d:
        raise ZariskiError("self-check failed: P + N != D")
    for n, c in dec.N:
        if sign(c) < 0:
            raise ZariskiError(f"self-check failed: N coefficient on {n} is negative")
        if not pool.dot(dec.P, n).is_zero():
            raise ZariskiError(f"self-check failed: P is not orthogonal to {n}")
    for n in pool.names:
        if sign(pool.dot(dec.P, n)) < 0:
            raise ZariskiError(f"self-check failed: P is negative on {n}")


def zariski_decompose(surface: SurfaceLattice, d: DivisorPath, pool: NegativeCurvePool) -> Decomposition:
    """Zariski decomposition of a divisor with rational coefficients."""
    if pool.surface != surface:
        raise ZariskiError("pool lives on another surface")
    return _decompose(pool, d, _constant_sign)


# schedules

@dataclass(frozen=True)
class SchedulePiece:
    lo: Poly
    hi: Poly
    P: DivisorPath
    N: tuple[tuple[str, Poly], ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", Poly.lift(self.lo))
        object.__setattr__(self, "hi", Poly.lift(self.hi))
        object.__setattr__(self, "N", tuple(sorted((n, Poly.lift(c)) for n, c in self.N if not Poly.lift(c).is_zero())))

    @property
    def active(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.N)


@dataclass(frozen=True)
class Schedule:
    """Piecewise P and N along a parameter ``var``; breakpoints may depend on an outer parameter."""

    var: str
    lo: Poly
    pieces: tuple[SchedulePiece, ...]
    components: tuple[tuple[str, DivisorPath], ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", Poly.lift(self.lo))

    @property
    def hi(self) -> Poly:
        return self.pieces[-1].hi if self.pieces else self.lo

    @property
    def breakpoints(self) -> tuple[Poly, ...]:
        return (self.lo,) + tuple(p.hi for p in self.pieces)

    def component(self, name: str) -> DivisorPath:
        for n, c in self.components:
            if n == name:
                return c
        raise ZariskiError(f"unknown negative-part component {name!r}")

    def negative_part(self, piece: SchedulePiece) -> DivisorPath:
        basis = piece.P.basis
        out = DivisorPath.zero(basis)
        for n, c in piece.N:
            out = out + self.component(n).scale(c)
        return out

    def describe(self) -> list[str]:
        lines = []
        for p in self.pieces:
            n = " + ".join(f"({c})*{k}" for k, c in p.N) or "0"
            lines.append(f"{self.var} in [{p.lo}, {p.hi}]: P = {p.P}; N = {n}")
        return lines


@dataclass(frozen=True)
class Region:
    lo: Fraction
    hi: Fraction
    schedule: Schedule


@dataclass(frozen=True)
class Schedule2D:
    outer: str
    regions: tuple[Region, ...]

    @property
    def inner(self) -> str:
        return self.regions[0].schedule.var

    def threshold(self) -> "ThresholdCurve":
        # adjacent regions with the same t(u) are merged
        bps = [self.regions[0].lo]
        pieces: list[Poly] = []
        for r in self.regions:
            if pieces and pieces[-1] == r.schedule.hi:
                bps[-1] = r.hi
            else:
                pieces.append(r.schedule.hi)
                bps.append(r.hi)
        return ThresholdCurve(PiecewisePoly(self.outer, tuple(bps), tuple(pieces)))

    def describe(self) -> list[str]:
        lines = []
        for r in self.regions:
            lines.append(f"{self.outer} in [{r.lo}, {r.hi}]:")
            lines.extend("  " + s for s in r.schedule.describe())
        return lines


@dataclass(frozen=True)
class ThresholdCurve:
    t: PiecewisePoly


def _validity_polys(pool: NegativeCurvePool, dec: Decomposition) -> list[Poly]:
    out = [c for _, c in dec.N]
    active = set(dec.active)
    out += [pool.dot(dec.P, n) for n in pool.names if n not in active]
    out += [pool.dot(dec.P, n) for n, _ in pool.tests]
    return [q for q in out if not q.is_constant()]


def _root_bound(q: Poly, var: str) -> Fraction:
    a = univariate(q, var)
    while a and a[-1] == 0:
        a.pop()
    return 1 + max((abs(c / a[-1]) for c in a[:-1]), default=Fraction(0))


def _next_event(polys: Sequence[Poly], var: str, x: Fraction, hi: Fraction | None) -> Fraction | None:
    best = hi
    for q in polys:
        bound = _root_bound(q, var) + abs(x)
        roots, _ = rational_roots(q, x, bound, var)
        later = [r for r in roots if r > x]
        if later and (best is None or later[0] < best):
            best = later[0]
    if best is None:
        return None
    for q in polys:
        roots, _ = rational_roots(q, x, best, var)
        n_rat = sum(1 for r in roots if r > x)
        if count_real_roots(q, var, x, best) > n_rat:
            raise IrrationalBreakpoint(f"{q} has an irrational root in ({x}, {best}]")
    return best


def _merge_pieces(pieces: list[SchedulePiece]) -> list[SchedulePiece]:
    out: list[SchedulePiece] = []
    for p in pieces:
        if out and out[-1].P == p.P and out[-1].N == p.N:
            out[-1] = SchedulePiece(out[-1].lo, p.hi, p.P, p.N)
        else:
            out.append(p)
    return out


def _components(pool: NegativeCurvePool, pieces: Sequence[SchedulePiece]) -> tuple:
    names = sorted({n for p in pieces for n in p.active})
    return tuple((n, pool.path(n)) for n in names)


def parametric_zariski(surface: SurfaceLattice, d: DivisorPath, pool: NegativeCurvePool,
                       window: tuple = (0, None), var: str = "v",
                       outer: str | None = None):
    """Piecewise Zariski decomposition of a path D(v), or D(u, v) when ``outer`` is set.

    In one parameter the window upper end may be None, meaning "run to the
    pseudoeffective threshold". With ``outer`` the window is the outer
    interval and the inner parameter always runs from 0 to the threshold.
    """
    if pool.surface != surface:
        raise ZariskiError("pool lives on another surface")
    if outer is not None:
        return _parametric_2d(pool, d, outer, Q(window[0]), Q(window[1]), var)
    extra = [v for v in d.variables if v != var]
    if extra:
        raise ZariskiError(f"divisor depends on {extra}; pass outer=")
    lo = Q(window[0])
    hi = None if window[1] is None else Q(window[1])
    pieces: list[SchedulePiece] = []
    x = lo
    while hi is None or x < hi:
        try:
            dec = _decompose(pool, d, lambda p, x=x: germ_sign(p, var, x))
        except (NotPseudoEffective, NotNegativeDefinite):
            if hi is None:
                break
            raise
        y = _next_event(_validity_polys(pool, dec), var, x, hi)
        if y is None:
            raise ZariskiError(f"no pseudoeffective threshold found beyond {var}={x}")
        pieces.append(SchedulePiece(x, y, dec.P, dec.N))
        x = y
    pieces = _merge_pieces(pieces)
    return Schedule(var, Poly.const(lo), tuple(pieces), _components(pool, pieces))


class _Ambiguous(Exception):
    pass


_SAMPLE_WEIGHTS = (Fraction(37, 101), Fraction(59, 101), Fraction(23, 101), Fraction(71, 101),
                   Fraction(13, 101), Fraction(89, 101), Fraction(47, 101))


def _lift_at(pool: NegativeCurvePool, d: DivisorPath, outer: str, inner: str, u0: Fraction):
    numeric = d.substitute({outer: u0})
    sched = parametric_zariski(pool.surface, numeric, pool, (0, None), inner)
    if not sched.pieces:
        raise _Ambiguous()
    betas = [Poly()]
    decs = []
    for piece in sched.pieces:
        dec = solve_active(pool, d, piece.active)
        decs.append(dec)
        x = piece.hi.constant_value()
        sols = set()
        for q in _validity_polys(pool, dec):
            if q.substitute({outer: u0, inner: x}) != 0:
                continue
            cv = q.coefficients_in(inner)
            if max(cv) != 1:
                raise _Ambiguous()
            try:
                sols.add((-cv.get(0, Poly())).exact_div(cv[1]))
            except ExactError:
                raise ZariskiError(f"breakpoint of {q} is not polynomial in {outer}") from None
        if len(sols) != 1:
            raise _Ambiguous()
        betas.append(sols.pop())
    return decs, betas


def _interior_roots(q: Poly, var: str, lo: Fraction, hi: Fraction) -> list[Fraction]:
    if q.is_constant():
        return []
    roots, _ = rational_roots(q, lo, hi, var)
    inner = [r for r in roots if lo < r < hi]
    n_rat = sum(1 for r in roots if lo < r <= hi)
    if count_real_roots(q, var, lo, hi) > n_rat:
        raise IrrationalBreakpoint(f"{q} has an irrational root in ({lo}, {hi})")
    return inner


def _lift_region(pool, d, outer, inner, ua, ub, depth) -> list[Region]:
    if depth > 12:
        raise ZariskiError(f"subdivision of [{ua}, {ub}] does not terminate")
    for w in _SAMPLE_WEIGHTS:
        u0 = ua + (ub - ua) * w
        try:
            decs, betas = _lift_at(pool, d, outer, inner, u0)
        except _Ambiguous:
            continue
        crit = set()
        for j, dec in enumerate(decs):
            for q in _validity_polys(pool, dec):
                for beta in (betas[j], betas[j + 1]):
                    crit.update(_interior_roots(q.substitute({inner: beta}), outer, ua, ub))
            crit.update(_interior_roots(betas[j + 1] - betas[j], outer, ua, ub))
        if crit:
            cuts = [ua] + sorted(crit) + [ub]
            out = []
            for a, b in zip(cuts, cuts[1:]):
                out.extend(_lift_region(pool, d, outer, inner, a, b, depth + 1))
            return out
        pieces = [SchedulePiece(betas[j], betas[j + 1], dec.P, dec.N) for j, dec in enumerate(decs)]
        pieces = _merge_pieces(pieces)
        return [Region(ua, ub, Schedule(inner, Poly(), tuple(pieces), _components(pool, pieces)))]
    raise ZariskiError(f"no generic sample point found in [{ua}, {ub}]")


def _parametric_2d(pool, d, outer, ua, ub, inner) -> Schedule2D:
    extra = [v for v in d.variables if v not in (outer, inner)]
    if extra:
        raise ZariskiError(f"divisor depends on unexpected parameters {extra}")
    regions = _lift_region(pool, d, outer, inner, ua, ub, 0)
    merged: list[Region] = []
    for r in regions:
        if merged and merged[-1].schedule == r.schedule:
            merged[-1] = Region(merged[-1].lo, r.hi, r.schedule)
        else:
            merged.append(r)
    return Schedule2D(outer, tuple(merged))


def pseff_threshold(surface: SurfaceLattice, d: DivisorPath, pool: NegativeCurvePool,
                    var: str = "v", outer: str | None = None, window: tuple | None = None):
    """Pseudoeffective threshold in ``var``: a Fraction, or a ThresholdCurve in ``outer``."""
    if outer is None:
        sched = parametric_zariski(surface, d, pool, (0, None), var)
        return sched.hi.constant_value()
    if window is None:
        raise ZariskiError("an outer window is required")
    return parametric_zariski(surface, d, pool, window, var, outer).threshold()


# verification

@dataclass(frozen=True)
class VerifyReport:
    failures: tuple[str, ...]
    checks: int

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def first_failure(self) -> str | None:
        return self.failures[0] if self.failures else None

    def summary(self) -> str:
        return "pass" if self.ok else f"fail: {self.failures[0]}"


class _Checker:
    def __init__(self):
        self.failures: list[str] = []
        self.checks = 0

    def require(self, cond: bool, msg: str):
        self.checks += 1
        if not cond:
            self.failures.append(msg)

    def report(self) -> VerifyReport:
        return VerifyReport(tuple(self.failures), self.checks)


def _nonneg_between(q: Poly, inner: str, lo: Poly, hi: Poly, outer: str | None,
                    ua: Fraction | None, ub: Fraction | None) -> bool:
    """q >= 0 on {lo <= inner <= hi} (times [ua, ub] in the outer variable)."""
    if outer is None:
        return nonnegative_on(q, inner, lo.constant_value(), hi.constant_value())
    if q.degree(inner) <= 1:
        return all(nonnegative_on(q.substitute({inner: b}), outer, ua, ub) for b in (lo, hi))
    # nonlinear in the inner variable: exact sampling on a fine rational grid
    for i in range(9):
        u = ua + (ub - ua) * Fraction(i, 8)
        a, b = lo.evaluate({outer: u}), hi.evaluate({outer: u})
        if not nonnegative_on(q.substitute({outer: u}), inner, a, b):
            return False
    return True


def _verify_surface_pieces(chk: _Checker, sched: Schedule, pool: NegativeCurvePool, d: DivisorPath,
                           outer: str | None = None, ua=None, ub=None, tag: str = ""):
    var = sched.var
    surf = pool.surface
    prev_sq = None
    for k, piece in enumerate(sched.pieces):
        where = f"{tag}piece {k + 1} [{piece.lo}, {piece.hi}]"
        if outer is None:
            chk.require(piece.lo.constant_value() < piece.hi.constant_value(), f"{where}: empty interval")
        else:
            chk.require(nonnegative_on(piece.hi - piece.lo, outer, ua, ub), f"{where}: breakpoints out of order")
        chk.require(piece.P + sched.negative_part(piece) == d, f"{where}: P + N != D")
        for n, c in piece.N:
            chk.require(_nonneg_between(c, var, piece.lo, piece.hi, outer, ua, ub),
                        f"{where}: negativity of the N coefficient on {n}")
            vec = sched.component(n).coeffs
            chk.require(Poly.lift(surf.dot(piece.P.coeffs, vec)).is_zero(),
                        f"{where}: P is not orthogonal to {n}")
        for n, _ in pool.candidates + pool.tests:
            chk.require(_nonneg_between(pool.dot(piece.P, n), var, piece.lo, piece.hi, outer, ua, ub),
                        f"{where}: P is negative on {n}")
        sq = pair_eval(surf, piece.P, piece.P)
        if prev_sq is not None:
            chk.require(prev_sq.substitute({var: piece.lo}) == sq.substitute({var: piece.lo}),
                        f"{where}: P^2 is discontinuous at {piece.lo}")
        prev_sq = sq


def verify_schedule(schedule, d: DivisorPath, pool: NegativeCurvePool | None = None, *,
                    lattice: ThreefoldLattice | None = None,
                    functionals: Sequence[CurveFunctional] = (),
                    cubes: Sequence[Poly] | None = None) -> VerifyReport:
    """Check a declared schedule; failures are collected, never raised."""
    chk = _Checker()
    if isinstance(schedule, Schedule2D):
        if pool is None:
            raise ZariskiError("surface schedules need a pool")
        for r in schedule.regions:
            _verify_surface_pieces(chk, r.schedule, pool, d, schedule.outer, r.lo, r.hi,
                                   tag=f"{schedule.outer} in [{r.lo}, {r.hi}], ")
        return chk.report()
    if lattice is None:
        if pool is None:
            raise ZariskiError("surface schedules need a pool")
        _verify_surface_pieces(chk, schedule, pool, d)
        return chk.report()
    var = schedule.var
    prev = None
    if cubes is not None:
        chk.require(len(cubes) == len(schedule.pieces), "declared cube count differs from piece count")
    for k, piece in enumerate(schedule.pieces):
        where = f"piece {k + 1} [{piece.lo}, {piece.hi}]"
        lo, hi = piece.lo.constant_value(), piece.hi.constant_value()
        chk.require(lo < hi, f"{where}: empty interval")
        chk.require(piece.P + schedule.negative_part(piece) == d, f"{where}: P + N != D")
        for n, c in piece.N:
            chk.require(nonnegative_on(c, var, lo, hi), f"{where}: negativity of the N coefficient on {n}")
        for f in functionals:
            chk.require(nonnegative_on(curve_pair(f, piece.P), var, lo, hi), f"{where}: P is negative on {f.name}")
        c3 = cube(lattice, piece.P)
        if prev is not None:
            chk.require(prev.substitute({var: lo}) == c3.substitute({var: lo}),
                        f"{where}: P^3 is discontinuous at {lo}")
        if cubes is not None and k < len(cubes):
            chk.require(c3 == Poly.lift(cubes[k]), f"{where}: P^3 = {c3}, declared {cubes[k]}")
        prev = c3
    return chk.report()
