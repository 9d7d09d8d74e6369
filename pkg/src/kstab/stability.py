"""Fujita/Li invariants and nested-flag functionals computed from schedules."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .exact import PiecewisePoly, Poly, Q, integrate, integrate_piecewise, nonnegative_on
from .lattice import (
    CurveFunctional,
    DivisorPath,
    Restriction,
    SurfaceLattice,
    ThreefoldLattice,
    cube,
    pair_eval,
    restrict,
)
from .zariski import (
    NegativeCurvePool,
    Schedule,
    Schedule2D,
    parametric_zariski,
    verify_schedule,
)

Value = Union[Fraction, Poly]


class StabilityError(ValueError):
    """Raised when scenario data are inconsistent."""


class UnverifiedSchedule(StabilityError):
    """The declared schedule failed verification."""


def _as_value(p) -> Value:
    p = Poly.lift(p)
    return p.constant_value() if p.is_constant() else p


@dataclass(frozen=True)
class FujitaScenario:
    lattice: ThreefoldLattice
    D: DivisorPath
    schedule: Schedule
    A: Fraction
    V: Fraction
    functionals: tuple[CurveFunctional, ...] = ()
    cubes: tuple[Poly, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "A", Q(self.A))
        object.__setattr__(self, "V", Q(self.V))

    @property
    def var(self) -> str:
        return self.schedule.var


def check_fujita(sc: FujitaScenario) -> None:
    """Raise unless the schedule verifies, starts at 0 and V is the cube of D(0)."""
    if sc.schedule.lo != 0:
        raise StabilityError("schedule window must start at 0")
    if not sc.schedule.pieces:
        raise StabilityError("schedule has no pieces")
    rep = verify_schedule(sc.schedule, sc.D, lattice=sc.lattice, functionals=sc.functionals, cubes=sc.cubes)
    if not rep.ok:
        raise UnverifiedSchedule(rep.first_failure)
    v0 = cube(sc.lattice, sc.D.substitute({sc.var: 0}))
    if v0 != sc.V:
        raise StabilityError(f"normaliser V = {sc.V} but the cube of D(0) is {v0}")


def volume_function(sc: FujitaScenario) -> PiecewisePoly:
    bps = sc.schedule.breakpoints
    pieces = tuple(cube(sc.lattice, p.P) for p in sc.schedule.pieces)
    return PiecewisePoly(sc.var, tuple(b.constant_value() for b in bps), pieces, continuous=True)


def s_invariant(sc: FujitaScenario, trace: list[str] | None = None) -> Fraction:
    check_fujita(sc)
    vol = volume_function(sc)
    total = Fraction(0)
    for p, a, b in zip(vol.pieces, vol.breakpoints, vol.breakpoints[1:]):
        part = integrate(p, sc.var, a, b).constant_value()
        total += part
        if trace is not None:
            trace.append(f"integral of {p} over [{a}, {b}] = {part}")
    s = total / sc.V
    if trace is not None:
        trace.append(f"S = {total}/{sc.V} = {s}")
    return s


def beta(sc: FujitaScenario, trace: list[str] | None = None) -> Fraction:
    s = s_invariant(sc, trace)
    if trace is not None:
        trace.append(f"beta = {sc.A} - {s} = {sc.A - s}")
    return sc.A - s


@dataclass(frozen=True)
class FlagScenario:
    """Data of a flag (surface, curve, point) over a Fujita scenario."""

    threefold: FujitaScenario
    surface: SurfaceLattice
    restriction: Restriction
    curve: DivisorPath
    pool: NegativeCurvePool
    ord_curve: PiecewisePoly | None = None
    ord_point: PiecewisePoly | None = None
    membership: tuple[tuple[str, Fraction], ...] = ()
    declared: Schedule2D | None = None
    inner: str = "v"

    @property
    def window(self) -> tuple[Fraction, Fraction]:
        bps = self.threefold.schedule.breakpoints
        return bps[0].constant_value(), bps[-1].constant_value()


def restricted_path(flag: FlagScenario, piece_index: int) -> DivisorPath:
    return restrict(flag.threefold.schedule.pieces[piece_index].P, flag.restriction)


def surface_divisor(flag: FlagScenario, piece_index: int) -> DivisorPath:
    return restricted_path(flag, piece_index) - flag.curve.scale(Poly.var(flag.inner))


def surface_schedule(flag: FlagScenario) -> Schedule2D:
    """Run the Zariski algorithm over every threefold piece and concatenate."""
    outer = flag.threefold.var
    regions = []
    for k, piece in enumerate(flag.threefold.schedule.pieces):
        d = surface_divisor(flag, k)
        sched = parametric_zariski(flag.surface, d, flag.pool,
                                   (piece.lo.constant_value(), piece.hi.constant_value()),
                                   flag.inner, outer)
        regions.extend(sched.regions)
    return Schedule2D(outer, tuple(regions))


def _piece_index_for(flag: FlagScenario, lo: Fraction, hi: Fraction) -> int:
    for k, p in enumerate(flag.threefold.schedule.pieces):
        if p.lo.constant_value() <= lo and hi <= p.hi.constant_value():
            return k
    raise StabilityError(f"u-interval [{lo}, {hi}] straddles a threefold breakpoint")


def check_declared(flag: FlagScenario, computed: Schedule2D | None = None) -> list[str]:
    """Verify the declared surface schedule and compare it with the algorithm output."""
    if flag.declared is None:
        return []
    problems = []
    for r in flag.declared.regions:
        d = surface_divisor(flag, _piece_index_for(flag, r.lo, r.hi))
        rep = verify_schedule(Schedule2D(flag.declared.outer, (r,)), d, flag.pool)
        if not rep.ok:
            problems.append(rep.first_failure)
    computed = computed or surface_schedule(flag)
    if not problems and not schedules_identical(computed, flag.declared):
        problems.append("declared schedule differs from the computed one")
    return problems


def schedules_identical(a: Schedule2D, b: Schedule2D) -> bool:
    if a.outer != b.outer or len(a.regions) != len(b.regions):
        return False
    for r, s in zip(a.regions, b.regions):
        if (r.lo, r.hi) != (s.lo, s.hi) or r.schedule.lo != s.schedule.lo:
            return False
        if len(r.schedule.pieces) != len(s.schedule.pieces):
            return False
        for p, q in zip(r.schedule.pieces, s.schedule.pieces):
            if (p.lo, p.hi, p.P, p.N) != (q.lo, q.hi, q.P, q.N):
                return False
    return True


def _check_ord(pp: PiecewisePoly | None, window, label: str, var: str) -> None:
    if pp is None:
        return
    if pp.variable != var or pp.domain != window:
        raise StabilityError(f"{label} window {pp.domain} does not match the schedule window {window}")
    for p, a, b in zip(pp.pieces, pp.breakpoints, pp.breakpoints[1:]):
        # extra symbols (such as an unknown order) are assumed nonnegative
        for coeff in _coefficients_outside(p, var):
            if not nonnegative_on(coeff, var, a, b):
                raise StabilityError(f"{label} is negative on [{a}, {b}]")


def _coefficients_outside(p: Poly, var: str) -> list[Poly]:
    groups: dict = {}
    for mono, c in p.terms.items():
        key = tuple((v, e) for v, e in mono if v != var)
        rest = tuple((v, e) for v, e in mono if v == var)
        groups.setdefault(key, {})[rest] = c
    return [Poly(g) for g in groups.values()]


def _prepared(flag: FlagScenario) -> Schedule2D:
    check_fujita(flag.threefold)
    _check_ord(flag.ord_curve, flag.window, "ord along the curve", flag.threefold.var)
    _check_ord(flag.ord_point, flag.window, "ord at the point", flag.threefold.var)
    sched = surface_schedule(flag)
    problems = check_declared(flag, sched)
    if problems:
        raise UnverifiedSchedule(problems[0])
    t = sched.threshold().t
    if t.domain != flag.window:
        raise StabilityError(f"t(u) is defined on {t.domain}, not on {flag.window}")
    return sched


def _split_u(lo: Fraction, hi: Fraction, pp: PiecewisePoly | None):
    """Subintervals of [lo, hi] on which pp is a single polynomial."""
    if pp is None:
        return [(lo, hi, Poly())]
    cuts = sorted({lo, hi} | {b for b in pp.breakpoints if lo < b < hi})
    return [(a, b, pp.piece_at((a + b) / 2)) for a, b in zip(cuts, cuts[1:])]


def _double(sched: Schedule2D, integrand, weight: PiecewisePoly | None = None) -> Poly:
    """Sum over regions of the integral of integrand(piece) * weight(u) dv du."""
    u = sched.outer
    total = Poly()
    for r in sched.regions:
        v = r.schedule.var
        for a, b, w in _split_u(r.lo, r.hi, weight):
            for piece in r.schedule.pieces:
                f = integrand(piece)
                if weight is not None:
                    f = f * w
                if f.is_zero():
                    continue
                inner = integrate(f, v, piece.lo, piece.hi)
                total = total + integrate(inner, u, a, b)
    return total


def s_w2(flag: FlagScenario, trace: list[str] | None = None) -> Value:
    sched = _prepared(flag)
    V = flag.threefold.V
    u = flag.threefold.var
    surf = flag.surface
    sq_pieces = tuple(pair_eval(surf, restricted_path(flag, k), restricted_path(flag, k))
                      for k in range(len(flag.threefold.schedule.pieces)))
    bps = tuple(b.constant_value() for b in flag.threefold.schedule.breakpoints)
    ord_term = Poly()
    if flag.ord_curve is not None:
        sq = PiecewisePoly(u, bps, sq_pieces)
        ord_term = Poly.lift(integrate_piecewise(sq * flag.ord_curve, *flag.window))
    dbl = _double(sched, lambda p: pair_eval(surf, p.P, p.P))
    result = (ord_term + dbl).scale(Fraction(3) / V)
    if trace is not None:
        trace.extend(sched.describe())
        trace.append(f"ord term integral = {ord_term}")
        trace.append(f"double integral of P^2 = {dbl}")
        trace.append(f"S(W;C) = 3/{V} * ({ord_term + dbl}) = {result}")
    return _as_value(result)


def _membership_weights(flag: FlagScenario) -> list[tuple[str, Fraction]]:
    surf = flag.surface
    c = flag.curve.constant_vector()
    out = []
    for name, mult in flag.membership:
        vec = flag.pool.vector(name)
        if surf.dot(vec, c) <= 0:
            raise StabilityError(f"point claimed on {name}, which does not meet the curve")
        out.append((name, Q(mult)))
    for i, (a, _) in enumerate(out):
        for b, _ in out[i + 1:]:
            if surf.dot(flag.pool.vector(a), flag.pool.vector(b)) <= 0:
                raise StabilityError(f"point claimed on disjoint curves {a} and {b}")
    return out


def s_w3(flag: FlagScenario, trace: list[str] | None = None) -> Value:
    weights = _membership_weights(flag)
    sched = _prepared(flag)
    V = flag.threefold.V
    surf = flag.surface

    def pc(piece):
        return pair_eval(surf, piece.P, flag.curve)

    first = _double(sched, lambda p: pc(p) * pc(p))

    def local(piece):
        n = dict(piece.N)
        acc = Poly()
        for name, mult in weights:
            acc = acc + n.get(name, Poly()).scale(mult)
        return pc(piece) * acc

    second = _double(sched, local)
    if flag.ord_point is not None:
        second = second + _double(sched, pc, flag.ord_point)
    result = first.scale(Fraction(3) / V) + second.scale(Fraction(6) / V)
    if trace is not None:
        trace.extend(sched.describe())
        trace.append(f"double integral of (P.C)^2 = {first}")
        trace.append(f"double integral of (P.C)*ord_P = {second}")
        trace.append(f"S(W;P) = 3/{V} * {first} + 6/{V} * {second} = {result}")
    return _as_value(result)


def delta_lower_bound(entries: Sequence[tuple]) -> Fraction:
    """min A/S over (A, S) pairs."""
    if not entries:
        raise StabilityError("no entries")
    ratios = []
    for a, s in entries:
        a, s = Q(a), Q(s)
        if s <= 0:
            raise StabilityError(f"S must be positive, got {s}")
        ratios.append(a / s)
    return min(ratios)
