"""Scenario files: loading, dispatch by kind, comparison and reports.

A scenario file is JSON with ``schema_version`` 1. Shared definitions
(lattices, Fujita schedules, flags, torus actions, polynomial systems) sit
next to a ``scenarios`` list. Rationals are written as "p/q" strings.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Mapping

from .exact import ExactError, PiecewisePoly, Poly, Q, RatMatrix, parse_poly
from .geometry import (
    PolySystem,
    QuadraticForm,
    conic_fiber_form,
    discriminant,
    jacobian_rank_at,
    proportional,
    quadric_rank_at,
    singular_kernel,
    span_contains,
)
from .git import (
    TorusAction,
    classify,
    enumerate_classification,
    format_monomial,
    invariant_monomials,
    projective_equal,
    quotient_coords,
    verify_action_samples,
)
from .lattice import (
    CurveFunctional,
    DivisorPath,
    Restriction,
    SurfaceLattice,
    ThreefoldLattice,
    cube,
)
from .stability import (
    FlagScenario,
    FujitaScenario,
    beta,
    check_declared,
    delta_lower_bound,
    s_invariant,
    s_w2,
    s_w3,
    surface_schedule,
)
from .zariski import (
    NegativeCurvePool,
    Region,
    Schedule,
    Schedule2D,
    SchedulePiece,
    verify_schedule,
)

SCHEMA_VERSION = 1
KINDS = ("fujita", "flag2", "flag3", "delta", "git-classify", "git-table", "invariants-monomials",
         "quotient-map", "quadric-rank", "singular-kernel", "jacobian", "discriminant",
         "schedule-verify", "threshold", "action-samples")


class ScenarioError(ValueError):
    """Schema or input error; maps to exit status 2."""


def _req(obj: Mapping, key: str, ctx: str):
    if not isinstance(obj, Mapping):
        raise ScenarioError(f"{ctx}: expected an object")
    if key not in obj:
        raise ScenarioError(f"{ctx}: missing field '{key}'")
    return obj[key]


def _q(x, ctx: str) -> Fraction:
    try:
        return Q(x)
    except (ExactError, ValueError, ZeroDivisionError):
        raise ScenarioError(f"{ctx}: {x!r} is not an exact rational") from None


def _poly(x, ctx: str) -> Poly:
    try:
        return parse_poly(x) if isinstance(x, str) else Poly.lift(Q(x))
    except (ExactError, ValueError):
        raise ScenarioError(f"{ctx}: cannot read {x!r} as a polynomial") from None


@dataclass(frozen=True)
class Scenario:
    id: str
    kind: str
    inputs: dict
    expected: Any
    provenance: str
    flag: dict | None
    source: str
    suite: "Suite" = field(repr=False, compare=False)


class Suite:
    """Definitions of one scenario file, built lazily and cached."""

    def __init__(self, data: dict, source: str):
        self.data = data
        self.source = source
        self._cache: dict = {}
        self._lock = threading.RLock()

    def _get(self, section: str, name: str, builder: Callable):
        key = (section, name)
        with self._lock:
            if key not in self._cache:
                table = self.data.get(section, {})
                if name not in table:
                    raise ScenarioError(f"{self.source}: unknown {section[:-1]} '{name}'")
                self._cache[key] = builder(table[name], f"{self.source}: {section}.{name}")
            return self._cache[key]

    def lattice(self, name: str):
        return self._get("lattices", name, _build_lattice)

    def fujita(self, name: str) -> FujitaScenario:
        return self._get("fujitas", name, lambda d, ctx: _build_fujita(self, d, ctx))

    def flag(self, name: str) -> FlagScenario:
        return self._get("flags", name, lambda d, ctx: _build_flag(self, d, ctx))

    def action(self, name: str) -> TorusAction:
        return self._get("actions", name, _build_action)


def _build_lattice(d: dict, ctx: str):
    kind = _req(d, "kind", ctx)
    basis = _req(d, "basis", ctx)
    try:
        if kind == "threefold":
            return ThreefoldLattice.from_table(basis, _req(d, "triples", ctx), d.get("zero_pairs", ()))
        if kind == "surface":
            return SurfaceLattice.from_table(basis, _req(d, "gram", ctx))
    except (ValueError, ExactError) as exc:
        raise ScenarioError(f"{ctx}: {exc}") from None
    raise ScenarioError(f"{ctx}: lattice kind must be 'threefold' or 'surface'")


def _classes(basis, table: Mapping[str, str], ctx: str) -> dict[str, DivisorPath]:
    out = {}
    for name, text in (table or {}).items():
        out[name] = _path(text, basis, ctx, out)
    return out


def _path(text, basis, ctx, classes=None) -> DivisorPath:
    try:
        return DivisorPath.parse(str(text), basis, classes)
    except (ValueError, ExactError) as exc:
        raise ScenarioError(f"{ctx}: {exc}") from None


def _pieces(spec: list, basis, classes: dict, d_path: DivisorPath | None, var: str, lo, ctx: str,
            resolve: Callable[[str], DivisorPath]):
    pieces = []
    used = {}
    start = lo
    for k, pd in enumerate(spec):
        pctx = f"{ctx} piece {k + 1}"
        end = _poly(_req(pd, "to", pctx), pctx)
        n = {}
        for name, coeff in pd.get("N", {}).items():
            used[name] = resolve(name)
            n[name] = _poly(coeff, pctx)
        if "P" in pd:
            p = _path(pd["P"], basis, pctx, classes)
        else:
            if d_path is None:
                raise ScenarioError(f"{pctx}: missing field 'P'")
            p = d_path
            for name, c in n.items():
                p = p - used[name].scale(c)
        pieces.append(SchedulePiece(start, end, p, tuple(n.items())))
        start = end
    return tuple(pieces), tuple(sorted(used.items()))


def _build_fujita(suite: Suite, d: dict, ctx: str) -> FujitaScenario:
    lat = suite.lattice(_req(d, "lattice", ctx))
    if not isinstance(lat, ThreefoldLattice):
        raise ScenarioError(f"{ctx}: Fujita scenarios need a threefold lattice")
    var = d.get("var", "u")
    classes = _classes(lat.basis, d.get("classes", {}), ctx)
    dpath = _path(_req(d, "D", ctx), lat.basis, ctx, classes)

    def resolve(name):
        if name in classes:
            return classes[name]
        return _path(name, lat.basis, ctx)

    pieces, comps = _pieces(_req(d, "pieces", ctx), lat.basis, classes, dpath, var, Poly(), ctx, resolve)
    funcs = []
    for fd in d.get("functionals", []):
        name = _req(fd, "name", ctx)
        if "product" in fd:
            a, b = (_path(x, lat.basis, ctx, classes) for x in fd["product"])
            funcs.append(CurveFunctional.product(lat, name, a, b))
        else:
            funcs.append(CurveFunctional.explicit(name, lat.basis, _req(fd, "pairing", ctx)))
    cubes = tuple(_poly(c, ctx) for c in d["cubes"]) if "cubes" in d else None
    return FujitaScenario(lat, dpath, Schedule(var, Poly(), pieces, comps),
                          _q(_req(d, "A", ctx), ctx), _q(_req(d, "V", ctx), ctx), tuple(funcs), cubes)


def _piecewise(d, var: str, ctx: str) -> PiecewisePoly:
    try:
        return PiecewisePoly(var, tuple(_q(b, ctx) for b in _req(d, "breaks", ctx)),
                             tuple(_poly(p, ctx) for p in _req(d, "pieces", ctx)))
    except ExactError as exc:
        raise ScenarioError(f"{ctx}: {exc}") from None


def _build_flag(suite: Suite, d: dict, ctx: str) -> FlagScenario:
    fj = suite.fujita(_req(d, "fujita", ctx))
    surf = suite.lattice(_req(d, "surface", ctx))
    if not isinstance(surf, SurfaceLattice):
        raise ScenarioError(f"{ctx}: flags need a surface lattice")
    try:
        restriction = Restriction.parse(fj.lattice.basis, surf.basis, _req(d, "restriction", ctx))
        pd = _req(d, "pool", ctx)
        pool = NegativeCurvePool.build(surf, pd.get("candidates", []), pd.get("tests", []), pd.get("classes", {}))
    except (ValueError, ExactError) as exc:
        raise ScenarioError(f"{ctx}: {exc}") from None
    curve = _path(_req(d, "curve", ctx), surf.basis, ctx)
    if curve.variables:
        raise ScenarioError(f"{ctx}: the flag curve must be a constant class")
    u = fj.var
    ord_curve = _piecewise(d["ord_curve"], u, ctx) if "ord_curve" in d else None
    ord_point = _piecewise(d["ord_point"], u, ctx) if "ord_point" in d else None
    membership = tuple((str(n), _q(m, ctx)) for n, m in d.get("membership", []))
    declared = None
    if "declared" in d:
        regions = []
        for k, rd in enumerate(d["declared"]):
            rctx = f"{ctx} declared region {k + 1}"
            lo, hi = (_q(x, rctx) for x in _req(rd, "u", rctx))
            pieces, comps = _pieces(_req(rd, "pieces", rctx), surf.basis, {}, None, "v", Poly(), rctx,
                                    lambda n: pool.path(n))
            regions.append(Region(lo, hi, Schedule("v", Poly(), pieces, comps)))
        declared = Schedule2D(u, tuple(regions))
    return FlagScenario(fj, surf, restriction, curve, pool, ord_curve, ord_point, membership, declared)


def _build_action(d: dict, ctx: str) -> TorusAction:
    try:
        return TorusAction(tuple(_req(d, "coords", ctx)), tuple(tuple(w) for w in _req(d, "weights", ctx)))
    except ValueError as exc:
        raise ScenarioError(f"{ctx}: {exc}") from None


# loading

def load_file(path: str | Path) -> list[Scenario]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    return parse_suite(data, str(path.name))


def parse_suite(data: dict, source: str) -> list[Scenario]:
    version = _req(data, "schema_version", source)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"{source}: unsupported schema_version {version!r}")
    suite = Suite(data, source)
    out = []
    seen = set()
    for k, sd in enumerate(_req(data, "scenarios", source)):
        ctx = f"{source}: scenario {k + 1}"
        sid = _req(sd, "id", ctx)
        ctx = f"{source}: scenario '{sid}'"
        kind = _req(sd, "kind", ctx)
        if kind not in KINDS:
            raise ScenarioError(f"{ctx}: unknown kind {kind!r}")
        if sid in seen:
            raise ScenarioError(f"{ctx}: duplicate id")
        seen.add(sid)
        flag = sd.get("flag")
        if flag is not None:
            _req(flag, "consistent_reading", f"{ctx} flag")
            _req(flag, "note", f"{ctx} flag")
        out.append(Scenario(sid, kind, dict(_req(sd, "inputs", ctx)), sd.get("expected"),
                            _req(sd, "provenance", ctx), flag, source, suite))
    return out


def load_directory(directory: str | Path) -> list[Scenario]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ScenarioError(f"{directory}: not a directory")
    out: list[Scenario] = []
    ids: set = set()
    for path in sorted(directory.glob("*.json")):
        for sc in load_file(path):
            if sc.id in ids:
                raise ScenarioError(f"{path.name}: duplicate id '{sc.id}' in the suite")
            ids.add(sc.id)
            out.append(sc)
    return out


# computation per kind

def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Poly):
        return str(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(y) for y in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


def _value(x) -> Poly:
    return _poly(x, "value")


def _compute_fujita(sc: Scenario, trace):
    fj = sc.suite.fujita(_req(sc.inputs, "fujita", sc.id))
    quantity = sc.inputs.get("quantity", "beta")
    if quantity == "S":
        return s_invariant(fj, trace)
    if quantity == "beta":
        return beta(fj, trace)
    if quantity == "integrands":
        s_invariant(fj, trace)
        return [cube(fj.lattice, p.P) for p in fj.schedule.pieces]
    if quantity == "volume":
        return cube(fj.lattice, fj.D.substitute({fj.var: 0}))
    raise ScenarioError(f"{sc.id}: unknown quantity {quantity!r}")


def _flag_for(sc: Scenario) -> FlagScenario:
    flag = sc.suite.flag(_req(sc.inputs, "flag", sc.id))
    if "membership" in sc.inputs:
        flag = replace(flag, membership=tuple((str(n), _q(m, sc.id)) for n, m in sc.inputs["membership"]))
    if "ord_point" in sc.inputs:
        flag = replace(flag, ord_point=_piecewise(sc.inputs["ord_point"], flag.threefold.var, sc.id))
    return flag


def _compute_schedule_verify(sc: Scenario, trace):
    if "flag" in sc.inputs:
        flag = _flag_for(sc)
        if flag.declared is None:
            raise ScenarioError(f"{sc.id}: flag has no declared schedule")
        computed = surface_schedule(flag)
        trace.extend(computed.describe())
        problems = check_declared(flag, computed)
        return "pass" if not problems else f"fail: {problems[0]}"
    fj = sc.suite.fujita(_req(sc.inputs, "fujita", sc.id))
    cubes = fj.cubes
    if "cubes" in sc.inputs:
        cubes = tuple(_poly(c, sc.id) for c in sc.inputs["cubes"])
    trace.extend(fj.schedule.describe())
    rep = verify_schedule(fj.schedule, fj.D, lattice=fj.lattice, functionals=fj.functionals, cubes=cubes)
    trace.append(f"{rep.checks} checks")
    return rep.summary()


def _compute_threshold(sc: Scenario, trace):
    flag = _flag_for(sc)
    sched = surface_schedule(flag)
    trace.extend(sched.describe())
    t = sched.threshold().t
    return {"breaks": list(t.breakpoints), "pieces": list(t.pieces)}


def _system(sc: Scenario) -> PolySystem:
    sd = _req(sc.inputs, "system", sc.id)
    if isinstance(sd, str):
        sd = _req(sc.suite.data.get("systems", {}), sd, sc.id)
    try:
        return PolySystem.parse(_req(sd, "equations", sc.id), _req(sd, "factors", sc.id),
                                sc.inputs.get("params", {}))
    except (ValueError, ExactError) as exc:
        raise ScenarioError(f"{sc.id}: {exc}") from None


def _quadric(sc: Scenario) -> QuadraticForm:
    q = _req(sc.inputs, "quadric", sc.id)
    q = sc.suite.data.get("quadrics", {}).get(q, q)
    return QuadraticForm.from_poly(_poly(q, sc.id), _req(sc.inputs, "variables", sc.id))


def _params(sc: Scenario) -> dict:
    return {k: _q(v, sc.id) for k, v in sc.inputs.get("params", {}).items()}


def _compute_discriminant(sc: Scenario, trace):
    inp = sc.inputs
    if "quadric" in inp:
        q = inp["quadric"]
        q = sc.suite.data.get("quadrics", {}).get(q, q)
        form = conic_fiber_form(_poly(q, sc.id), {k: _poly(v, sc.id) for k, v in
                                                  _req(inp, "substitution", sc.id).items()},
                                inp.get("fiber", ("s", "r", "w")))
        trace.append(f"fiber matrix {form.matrix}")
        d = discriminant(form)
    else:
        d = _poly(_req(inp, "poly", sc.id), sc.id)
    params = _params(sc)
    if params:
        d = d.substitute(params)
    return d


def _compute(sc: Scenario, trace: list[str]):
    inp = sc.inputs
    k = sc.kind
    if k == "fujita":
        return _compute_fujita(sc, trace)
    if k == "flag2":
        return s_w2(_flag_for(sc), trace)
    if k == "flag3":
        return s_w3(_flag_for(sc), trace)
    if k == "delta":
        return delta_lower_bound([(_q(a, sc.id), _q(s, sc.id)) for a, s in _req(inp, "entries", sc.id)])
    if k == "git-classify":
        return classify(sc.suite.action(_req(inp, "action", sc.id)), _req(inp, "support", sc.id)).value
    if k == "git-table":
        table = enumerate_classification(sc.suite.action(_req(inp, "action", sc.id)))
        out = {}
        for row in table.rows:
            out.setdefault(row.verdict.value, []).append(list(row.names))
        out["annotated"] = [list(r.names) for r in table.rows if r.note]
        trace.append("counts: " + ", ".join(f"{a}={b}" for a, b in table.counts().items()))
        return out
    if k == "invariants-monomials":
        action = sc.suite.action(_req(inp, "action", sc.id))
        mons = invariant_monomials(action, int(_req(inp, "max_degree", sc.id)), bool(inp.get("exact_degree", False)))
        return [format_monomial(action.coords, e) for e in mons]
    if k == "quotient-map":
        return list(quotient_coords([_poly(c, sc.id) for c in _req(inp, "map", sc.id)],
                                    _req(inp, "coords", sc.id), [_q(x, sc.id) for x in _req(inp, "point", sc.id)],
                                    inp.get("degrees")))
    if k == "quadric-rank":
        return quadric_rank_at(_quadric(sc), _params(sc))
    if k == "singular-kernel":
        return {"dimension": len(singular_kernel(_quadric(sc), _params(sc))),
                "basis": [list(v) for v in singular_kernel(_quadric(sc), _params(sc))]}
    if k == "jacobian":
        sys = _system(sc)
        pt = tuple(tuple(_q(x, sc.id) for x in f) for f in _req(inp, "point", sc.id))
        return jacobian_rank_at(sys, pt)
    if k == "discriminant":
        return _compute_discriminant(sc, trace)
    if k == "schedule-verify":
        return _compute_schedule_verify(sc, trace)
    if k == "threshold":
        return _compute_threshold(sc, trace)
    if k == "action-samples":
        basis = RatMatrix.of([[_q(x, sc.id) for x in r] for r in _req(inp, "basis_change", sc.id)])
        claimed = [(_q(c, sc.id), tuple(e)) for c, e in _req(inp, "claimed", sc.id)]
        samples = [tuple(_q(x, sc.id) for x in s) for s in _req(inp, "samples", sc.id)]
        return verify_action_samples(_req(inp, "matrix", sc.id), basis, claimed, samples)
    raise ScenarioError(f"{sc.id}: unknown kind {k!r}")


def _same(kind: str, computed, expected, inputs: dict) -> bool:
    try:
        if kind in ("fujita", "flag2", "flag3", "delta"):
            if isinstance(computed, list):
                return isinstance(expected, list) and len(expected) == len(computed) and \
                    all(_value(e) == Poly.lift(c) for c, e in zip(computed, expected))
            return _value(expected) == Poly.lift(computed)
        if kind == "discriminant":
            return proportional(computed, _value(expected).substitute(
                {k: Q(v) for k, v in inputs.get("params", {}).items()}))
        if kind == "quotient-map":
            return projective_equal(computed, [Q(x) for x in expected], inputs.get("degrees"))
        if kind == "invariants-monomials":
            return sorted(computed) == sorted(expected)
        if kind == "git-table":
            keys = set(computed) | set(expected)
            norm = lambda rows: sorted(sorted(r) for r in rows)  # noqa: E731
            return all(norm(computed.get(k, [])) == norm(expected.get(k, [])) for k in keys)
        if kind == "singular-kernel":
            if computed["dimension"] != expected["dimension"]:
                return False
            return all(span_contains(computed["basis"], [Q(x) for x in v]) for v in expected.get("contains", []))
        if kind == "threshold":
            return [Q(b) for b in expected["breaks"]] == computed["breaks"] and \
                [_value(p) for p in expected["pieces"]] == list(computed["pieces"])
        return computed == expected
    except (ScenarioError, ExactError, KeyError, TypeError, ValueError):
        return False


@dataclass(frozen=True)
class Result:
    id: str
    kind: str
    verdict: str
    computed: Any
    expected: Any
    provenance: str
    source: str
    trace: tuple[str, ...] = ()
    note: str = ""

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind, "verdict": self.verdict, "computed": self.computed,
                "expected": self.expected, "provenance": self.provenance, "source": self.source,
                "trace": list(self.trace), "note": self.note}


def run_scenario(sc: Scenario) -> Result:
    trace: list[str] = []
    try:
        computed = _compute(sc, trace)
    except ScenarioError:
        raise
    except (ValueError, ArithmeticError) as exc:
        return Result(sc.id, sc.kind, "mismatch", f"error: {exc}", _jsonable(sc.expected),
                      sc.provenance, sc.source, tuple(trace), "computation failed")
    note = ""
    if sc.expected is None:
        verdict = "exploratory"
    elif _same(sc.kind, computed, sc.expected, sc.inputs):
        verdict = "match"
    elif sc.flag is not None and _same(sc.kind, computed, sc.flag["consistent_reading"], sc.inputs):
        verdict = "flagged"
        note = sc.flag["note"]
    else:
        verdict = "mismatch"
        if sc.flag is not None:
            note = sc.flag["note"]
    return Result(sc.id, sc.kind, verdict, _jsonable(computed), _jsonable(sc.expected),
                  sc.provenance, sc.source, tuple(trace), note)


@dataclass(frozen=True)
class Report:
    results: tuple[Result, ...]

    def summary(self) -> dict[str, int]:
        out = {"total": len(self.results), "match": 0, "flagged": 0, "mismatch": 0, "exploratory": 0}
        for r in self.results:
            out[r.verdict] += 1
        return out

    @property
    def ok(self) -> bool:
        return self.summary()["mismatch"] == 0

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "summary": self.summary(),
                "results": [r.to_dict() for r in self.results]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        try:
            return cls(tuple(Result(r["id"], r["kind"], r["verdict"], r["computed"], r["expected"],
                                    r["provenance"], r["source"], tuple(r.get("trace", ())), r.get("note", ""))
                             for r in data["results"]))
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"malformed results file: missing {exc}") from None

    def render_table(self) -> str:
        def short(x, n=40):
            s = x if isinstance(x, str) else json.dumps(x, sort_keys=True)
            return s if len(s) <= n else s[: n - 3] + "..."

        w = max([len(r.id) for r in self.results] + [2])
        lines = [f"{'id':<{w}}  {'kind':<20}  {'verdict':<9}  {'computed':<40}  expected"]
        for r in self.results:
            lines.append(f"{r.id:<{w}}  {r.kind:<20}  {r.verdict:<9}  {short(r.computed):<40}  {short(r.expected)}")
            lines.append(f"{'':<{w}}  source: {r.provenance}")
            if r.note:
                lines.append(f"{'':<{w}}  note: {r.note}")
        s = self.summary()
        lines.append(f"{s['total']} scenarios: {s['match']} match, {s['flagged']} flagged, "
                     f"{s['mismatch']} mismatch")
        return "\n".join(lines) + "\n"


def run_all(scenarios: list[Scenario], jobs: int = 1) -> Report:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_scenario, scenarios))
    else:
        results = [run_scenario(s) for s in scenarios]
    return Report(tuple(sorted(results, key=lambda r: r.id)))


def verify_all(directory: str | Path, jobs: int = 1) -> Report:
    return run_all(load_directory(directory), jobs)
