"""Exact arithmetic: rationals, sparse polynomials, piecewise polynomials, matrices.

Everything here is immutable and float-free. ``Fraction`` from the standard
library is the rational type.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key, reduce
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence, Union

Rational = Fraction
Monomial = tuple  # sorted tuple of (variable, exponent) pairs
Number = Union[int, Fraction]


class ExactError(ValueError):
    """Raised for invalid exact-arithmetic requests."""


def Q(value) -> Fraction:
    """Coerce an int, Fraction or "p/q" string to a Fraction. Floats are refused."""
    if isinstance(value, bool):
        raise ExactError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(ch in text for ch in ".eE"):
            raise ExactError(f"not an exact rational: {value!r}")
        return Fraction(text)
    raise ExactError(f"cannot coerce {type(value).__name__} to a rational")


def fmt_q(x: Fraction) -> str:
    return str(Fraction(x))


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def _mono_cmp(a: Monomial, b: Monomial) -> int:
    # graded lex with variables ranked alphabetically (a > b > ... > u > v)
    da, db = sum(e for _, e in a), sum(e for _, e in b)
    if da != db:
        return -1 if da < db else 1
    for (va, ea), (vb, eb) in zip(a, b):
        if va != vb:
            return 1 if va < vb else -1
        if ea != eb:
            return -1 if ea < eb else 1
    return (len(a) > len(b)) - (len(a) < len(b))


_mono_key = cmp_to_key(_mono_cmp)


class Poly:
    """Sparse multivariate polynomial with rational coefficients.

    Monomials are tuples of ``(name, exponent)`` sorted by name, so two
    polynomials are equal iff their term dictionaries are equal.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        clean: dict = {}
        if terms:
            for mono, c in terms.items():
                c = Q(c)
                if c:
                    clean[tuple(sorted((v, e) for v, e in mono if e))] = c
        self._terms = clean
        self._hash = None

    # construction
    @classmethod
    def const(cls, c: Number) -> "Poly":
        return cls({(): c})

    @classmethod
    def var(cls, name: str) -> "Poly":
        if not name.isidentifier():
            raise ExactError(f"bad variable name {name!r}")
        return cls({((name, 1),): 1})

    @classmethod
    def _raw(cls, terms: dict) -> "Poly":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    @staticmethod
    def lift(x) -> "Poly":
        if isinstance(x, Poly):
            return x
        return Poly.const(Q(x))

    # inspection
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted({v for m in self._terms for v, _ in m}))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ExactError(f"{self} is not constant")
        return self._terms.get((), Fraction(0))

    def degree(self, var: str | None = None) -> int:
        if not self._terms:
            return -1
        if var is None:
            return max(sum(e for _, e in m) for m in self._terms)
        return max(dict(m).get(var, 0) for m in self._terms)

    def coefficients_in(self, var: str) -> dict[int, "Poly"]:
        """View as a polynomial in ``var``: exponent -> coefficient polynomial."""
        out: dict[int, dict] = {}
        for m, c in self._terms.items():
            d = dict(m)
            e = d.pop(var, 0)
            out.setdefault(e, {})[tuple(sorted(d.items()))] = c
        return {e: Poly._raw(t) for e, t in out.items()}

    def ordered_terms(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self._terms.items(), key=lambda kv: _mono_key(kv[0]), reverse=True)

    def leading_term(self) -> tuple[Monomial, Fraction]:
        if not self._terms:
            raise ExactError("zero polynomial has no leading term")
        return self.ordered_terms()[0]

    # arithmetic
    def __add__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            try:
                other = Poly.lift(other)
            except ExactError:
                return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Poly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            try:
                other = Poly.lift(other)
            except ExactError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return Poly.lift(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            try:
                c = Q(other)
            except ExactError:
                return NotImplemented
            return self.scale(c)
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return Poly._raw(out)

    __rmul__ = __mul__

    def scale(self, c: Number) -> "Poly":
        c = Q(c)
        if not c:
            return Poly()
        return Poly._raw({m: v * c for m, v in self._terms.items()})

    def __truediv__(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.is_constant() and not other.is_zero():
                return self.scale(1 / other.constant_value())
            return self.exact_div(other)
        c = Q(other)
        if not c:
            raise ZeroDivisionError("division of a polynomial by zero")
        return self.scale(1 / c)

    def __pow__(self, n: int) -> "Poly":
        if not isinstance(n, int) or n < 0:
            raise ExactError("only nonnegative integer powers")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self._terms == other._terms
        try:
            return self._terms == Poly.lift(other)._terms
        except ExactError:
            return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._terms)

    # calculus and substitution
    def diff(self, var: str) -> "Poly":
        out: dict = {}
        for m, c in self._terms.items():
            d = dict(m)
            e = d.get(var, 0)
            if e:
                d[var] = e - 1
                key = tuple(sorted((v, k) for v, k in d.items() if k))
                out[key] = out.get(key, 0) + c * e
        return Poly(out)

    def antiderivative(self, var: str) -> "Poly":
        out: dict = {}
        for m, c in self._terms.items():
            d = dict(m)
            e = d.get(var, 0) + 1
            d[var] = e
            out[tuple(sorted(d.items()))] = c / e
        return Poly._raw(out)

    def substitute(self, mapping: Mapping[str, object], strict: bool = False) -> "Poly":
        """Replace variables by polynomials or rationals.

        With ``strict`` every variable of ``self`` must be mapped.
        """
        if strict:
            missing = [v for v in self.variables if v not in mapping]
            if missing:
                raise ExactError(f"substitution missing variable(s) {missing}")
        images = {v: Poly.lift(p) for v, p in mapping.items()}
        powers: dict = {}

        def power(v, e):
            key = (v, e)
            if key not in powers:
                powers[key] = images[v] ** e
            return powers[key]

        out = Poly()
        acc: dict = {}
        for m, c in self._terms.items():
            rest = []
            term = None
            for v, e in m:
                if v in images:
                    f = power(v, e)
                    term = f if term is None else term * f
                else:
                    rest.append((v, e))
            if term is None:
                s = acc.get(tuple(rest), 0) + c
                acc[tuple(rest)] = s
            else:
                out = out + term * Poly._raw({tuple(rest): c})
        return out + Poly(acc)

    def evaluate(self, point: Mapping[str, Number]) -> Fraction:
        missing = [v for v in self.variables if v not in point]
        if missing:
            raise ExactError(f"evaluation point missing variable(s) {missing}")
        total = Fraction(0)
        vals = {v: Q(x) for v, x in point.items()}
        for m, c in self._terms.items():
            t = c
            for v, e in m:
                t *= vals[v] ** e
            total += t
        return total

    def __call__(self, **point) -> Fraction:
        return self.evaluate(point)

    def exact_div(self, other: "Poly") -> "Poly":
        """Divide exactly; raise ExactError if ``other`` does not divide ``self``."""
        other = Poly.lift(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if other.is_constant():
            return self.scale(1 / other.constant_value())
        lm, lc = other.leading_term()
        rem = self
        quot: dict = {}
        lmd = dict(lm)
        while rem:
            m, c = rem.leading_term()
            md = dict(m)
            if any(md.get(v, 0) < e for v, e in lmd.items()):
                raise ExactError(f"{other} does not divide {self}")
            qm = tuple(sorted((v, md.get(v, 0) - lmd.get(v, 0)) for v in md
                              if md.get(v, 0) - lmd.get(v, 0)))
            qc = c / lc
            quot[qm] = qc
            rem = rem - other * Poly._raw({qm: qc})
        return Poly._raw(quot)

    # printing
    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.ordered_terms():
            mono = "*".join(v if e == 1 else f"{v}**{e}" for v, e in m)
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"Poly({str(self)!r})"


PolyLike = Union[Poly, int, Fraction]


# expression parsing

_ALLOWED = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name,
            ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Load)


def parse_poly(text: str, env: Mapping[str, object] | None = None) -> Poly:
    """Parse an arithmetic expression into a Poly.

    Names in ``env`` are replaced by their values; other names become
    variables. Division is allowed only by nonzero constants, and ``^`` is
    read as a power.
    """
    if isinstance(text, (int, Fraction)):
        return Poly.const(text)
    if not isinstance(text, str):
        raise ExactError(f"expected an expression string, got {type(text).__name__}")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExactError(f"cannot parse {text!r}: {exc.msg}") from None
    env = {k: Poly.lift(v) for k, v in (env or {}).items()}
    return _walk(tree.body, env, text)


def _walk(node, env, text) -> Poly:
    if not isinstance(node, _ALLOWED):
        raise ExactError(f"disallowed syntax {type(node).__name__} in {text!r}")
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            raise ExactError(f"only integer literals are allowed in {text!r}")
        return Poly.const(node.value)
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else Poly.var(node.id)
    if isinstance(node, ast.UnaryOp):
        inner = _walk(node.operand, env, text)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp):
        left = _walk(node.left, env, text)
        right = _walk(node.right, env, text)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            if not right.is_constant() or right.is_zero():
                raise ExactError(f"division by a non-constant or zero in {text!r}")
            return left.scale(1 / right.constant_value())
        if isinstance(node.op, ast.Pow):
            if not right.is_constant():
                raise ExactError(f"non-constant exponent in {text!r}")
            e = right.constant_value()
            if e.denominator != 1 or e < 0:
                raise ExactError(f"exponent must be a nonnegative integer in {text!r}")
            return left ** int(e)
    raise ExactError(f"disallowed syntax in {text!r}")


def eval_rational(text: str, values: Mapping[str, Number]) -> Fraction:
    """Evaluate an expression to a rational; every name must be bound."""
    p = parse_poly(text, {k: Q(v) for k, v in values.items()})
    if not p.is_constant():
        raise ExactError(f"unbound names {list(p.variables)} in {text!r}")
    return p.constant_value()


# univariate helpers on dense coefficient lists (index = degree)

def univariate(p: Poly, var: str) -> list[Fraction]:
    extra = [v for v in p.variables if v != var]
    if extra:
        raise ExactError(f"{p} is not univariate in {var}")
    n = p.degree(var)
    out = [Fraction(0)] * (n + 1)
    for e, c in p.coefficients_in(var).items():
        out[e] = c.constant_value()
    return out


def from_univariate(coeffs: Sequence[Fraction], var: str) -> Poly:
    return Poly({((var, i),) if i else (): c for i, c in enumerate(coeffs)})


def _trim(a: list) -> list:
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _ueval(a: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _udivmod(a: list, b: list) -> tuple[list, list]:
    a, b = _trim(a), _trim(b)
    if not b:
        raise ZeroDivisionError("univariate division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    r = list(a)
    while len(r) >= len(b) and r:
        shift = len(r) - len(b)
        c = r[-1] / b[-1]
        q[shift] = c
        for i, bc in enumerate(b):
            r[i + shift] -= c * bc
        r = _trim(r)
    return _trim(q), r


def _uderiv(a: list) -> list:
    return _trim([i * c for i, c in enumerate(a)][1:])


def _ugcd(a: list, b: list) -> list:
    a, b = _trim(a), _trim(b)
    while b:
        _, r = _udivmod(a, b)
        a, b = b, r
    if not a:
        return a
    return [c / a[-1] for c in a]


def _squarefree(a: list) -> list:
    a = _trim(a)
    if len(a) <= 1:
        return a
    g = _ugcd(a, _uderiv(a))
    q, _ = _udivmod(a, g)
    return q


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def _sturm(a: list) -> list[list]:
    seq = [_trim(a), _uderiv(a)]
    while seq[-1]:
        _, r = _udivmod(seq[-2], seq[-1])
        seq.append([-c for c in r])
    return [s for s in seq if s]


def _variations(seq: list[list], x: Fraction) -> int:
    signs = [s for s in (_sign(_ueval(p, x)) for p in seq) if s]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def _cauchy_bound(a: list) -> Fraction:
    a = _trim(a)
    return 1 + max((abs(c / a[-1]) for c in a[:-1]), default=Fraction(0))


def count_real_roots(p: Poly, var: str, lo: Number, hi: Number) -> int:
    """Number of distinct real roots of p in the half-open interval (lo, hi]."""
    a = _squarefree(univariate(p, var))
    if len(a) <= 1:
        return 0
    seq = _sturm(a)
    return _variations(seq, Q(lo)) - _variations(seq, Q(hi))


def isolate_real_roots(p: Poly, var: str, lo: Number, hi: Number) -> list[tuple[Fraction, Fraction]]:
    """Disjoint rational intervals (a, b], each holding exactly one distinct root in (lo, hi]."""
    a = _squarefree(univariate(p, var))
    if len(a) <= 1:
        return []
    seq = _sturm(a)
    out = []
    stack = [(Q(lo), Q(hi))]
    while stack:
        x, y = stack.pop()
        n = _variations(seq, x) - _variations(seq, y)
        if n == 0:
            continue
        if n == 1:
            out.append((x, y))
            continue
        mid = (x + y) / 2
        stack.append((x, mid))
        stack.append((mid, y))
    return sorted(out)


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i * i != n:
                large.append(n // i)
        i += 1
    return small + large[::-1]


def _primitive_int(a: list) -> list[int]:
    den = reduce(lcm, (c.denominator for c in a), 1)
    ints = [int(c * den) for c in a]
    g = reduce(gcd, ints, 0)
    return [x // g for x in ints] if g else ints


def rational_roots(p: Poly, lo: Number, hi: Number, var: str | None = None
                   ) -> tuple[list[Fraction], bool]:
    """Rational roots of a univariate p in [lo, hi] and a residual flag.

    The flag is True when the factor left after removing the rational roots
    still has a real root in [lo, hi].
    """
    if p.is_zero():
        raise ExactError("rational_roots of the zero polynomial")
    if var is None:
        vs = p.variables
        if len(vs) > 1:
            raise ExactError(f"{p} is not univariate")
        var = vs[0] if vs else "x"
    lo, hi = Q(lo), Q(hi)
    a = _trim(univariate(p, var))
    roots: set[Fraction] = set()
    while len(a) > 1 and a[0] == 0:
        roots.add(Fraction(0))
        a = a[1:]
    changed = True
    while changed and len(a) > 1:
        changed = False
        ints = _primitive_int(a)
        for num in _divisors(ints[0]):
            for den in _divisors(ints[-1]):
                for r in (Fraction(num, den), Fraction(-num, den)):
                    if _ueval(a, r) == 0:
                        roots.add(r)
                        a, _ = _udivmod(a, [-r, Fraction(1)])
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
    inside = sorted(r for r in roots if lo <= r <= hi)
    residual = False
    if len(a) > 1:
        sf = _squarefree(a)
        if len(sf) > 1:
            seq = _sturm(sf)
            residual = (_variations(seq, lo) - _variations(seq, hi)) > 0 or _ueval(sf, lo) == 0
    return inside, residual


def germ_sign(p: Poly, var: str, x0: Number) -> int:
    """Sign of p on a small right neighbourhood of x0 (p univariate in var)."""
    if p.is_zero():
        return 0
    shifted = p.substitute({var: Poly.var(var) + Q(x0)})
    coeffs = univariate(shifted, var)
    for c in coeffs:
        if c:
            return _sign(c)
    return 0


def nonnegative_on(p: Poly, var: str, lo: Number, hi: Number) -> bool:
    """Exact test that a univariate p is >= 0 on the closed interval [lo, hi]."""
    lo, hi = Q(lo), Q(hi)
    if p.is_constant():
        return p.constant_value() >= 0
    a = univariate(p, var)
    samples = {lo, hi}
    for x, y in isolate_real_roots(p, var, lo, hi):
        samples.add(x)
        samples.add(y)
    pts = sorted(s for s in samples if lo <= s <= hi)
    for s in pts:
        if _ueval(a, s) < 0:
            return False
    for s, t in zip(pts, pts[1:]):
        if _ueval(a, (s + t) / 2) < 0:
            return False
    return True


# piecewise polynomials

@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial in one variable on closed intervals.

    Pieces may carry extra symbols (for instance an ``ord`` parameter);
    integrals then come back as polynomials in those symbols.
    """

    variable: str
    breakpoints: tuple[Fraction, ...]
    pieces: tuple[Poly, ...]
    continuous: bool = False

    def __post_init__(self):
        bps = tuple(Q(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", tuple(Poly.lift(p) for p in self.pieces))
        if len(bps) < 2:
            raise ExactError("a piecewise polynomial needs at least two breakpoints")
        if any(b >= c for b, c in zip(bps, bps[1:])):
            raise ExactError("breakpoints must be strictly increasing")
        if len(self.pieces) != len(bps) - 1:
            raise ExactError("need exactly one piece per interval")
        if self.continuous:
            for i in range(1, len(self.pieces)):
                x = {self.variable: bps[i]}
                if self.pieces[i - 1].substitute(x) != self.pieces[i].substitute(x):
                    raise ExactError(f"pieces disagree at breakpoint {bps[i]}")

    @classmethod
    def constant(cls, variable: str, lo: Number, hi: Number, value: PolyLike = 0):
        return cls(variable, (Q(lo), Q(hi)), (Poly.lift(value),))

    @property
    def domain(self) -> tuple[Fraction, Fraction]:
        return self.breakpoints[0], self.breakpoints[-1]

    def piece_at(self, x: Number) -> Poly:
        x = Q(x)
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise ExactError(f"{x} outside [{lo}, {hi}]")
        for i in range(len(self.pieces)):
            if x <= self.breakpoints[i + 1]:
                return self.pieces[i]
        return self.pieces[-1]

    def evaluate(self, x: Number) -> Poly:
        return self.piece_at(x).substitute({self.variable: Q(x)})

    def refine(self, points: Iterable[Number]) -> "PiecewisePoly":
        bps = sorted(set(self.breakpoints) | {Q(p) for p in points
                                               if self.domain[0] <= Q(p) <= self.domain[1]})
        pieces = tuple(self.piece_at((a + b) / 2) for a, b in zip(bps, bps[1:]))
        return PiecewisePoly(self.variable, tuple(bps), pieces)

    def __mul__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        if self.variable != other.variable or self.domain != other.domain:
            raise ExactError("piecewise product needs equal variable and domain")
        a = self.refine(other.breakpoints)
        b = other.refine(self.breakpoints)
        return PiecewisePoly(self.variable, a.breakpoints,
                             tuple(p * q for p, q in zip(a.pieces, b.pieces)))

    def __str__(self) -> str:
        parts = [f"{p} on [{a}, {b}]" for p, a, b in
                 zip(self.pieces, self.breakpoints, self.breakpoints[1:])]
        return "; ".join(parts)


def integrate_piecewise(f: PiecewisePoly, a: Number, b: Number) -> Union[Fraction, Poly]:
    """Exact integral of f over [a, b]; a Poly if the pieces carry other symbols."""
    a, b = Q(a), Q(b)
    lo, hi = f.domain
    if a > b or a < lo or b > hi:
        raise ExactError(f"interval [{a}, {b}] outside domain [{lo}, {hi}]")
    total = Poly()
    x = f.variable
    for p, s, t in zip(f.pieces, f.breakpoints, f.breakpoints[1:]):
        s, t = max(s, a), min(t, b)
        if s >= t:
            continue
        anti = p.antiderivative(x)
        total = total + anti.substitute({x: t}) - anti.substitute({x: s})
    return total.constant_value() if total.is_constant() else total


def integrate(p: Poly, var: str, lo: PolyLike, hi: PolyLike) -> Poly:
    """Definite integral of p in var between polynomial limits."""
    anti = p.antiderivative(var)
    return anti.substitute({var: Poly.lift(hi)}) - anti.substitute({var: Poly.lift(lo)})


# matrices

Entry = Union[Fraction, Poly]


def _is_zero(x) -> bool:
    return x == 0


@dataclass(frozen=True)
class RatMatrix:
    """Rectangular matrix with Fraction or Poly entries."""

    rows: tuple[tuple, ...]

    def __post_init__(self):
        rows = tuple(tuple(e if isinstance(e, Poly) else Q(e) for e in r) for r in self.rows)
        if rows and len({len(r) for r in rows}) != 1:
            raise ExactError("matrix rows must have equal length")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def of(cls, rows: Sequence[Sequence]) -> "RatMatrix":
        return cls(tuple(tuple(r) for r in rows))

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def ncols(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    @property
    def is_poly(self) -> bool:
        return any(isinstance(e, Poly) for r in self.rows for e in r)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def transpose(self) -> "RatMatrix":
        return RatMatrix(tuple(zip(*self.rows)))

    def __mul__(self, other: "RatMatrix") -> "RatMatrix":
        if self.ncols != other.nrows:
            raise ExactError("matrix dimensions do not match")
        cols = list(zip(*other.rows))
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                acc = Fraction(0)
                for x, y in zip(r, c):
                    if not _is_zero(x) and not _is_zero(y):
                        acc = acc + x * y
                row.append(acc)
            out.append(tuple(row))
        return RatMatrix(tuple(out))

    def map(self, fn) -> "RatMatrix":
        return RatMatrix(tuple(tuple(fn(e) for e in r) for r in self.rows))

    def evaluate(self, point: Mapping[str, Number]) -> "RatMatrix":
        return self.map(lambda e: e.evaluate(point) if isinstance(e, Poly) else e)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "RatMatrix":
        return RatMatrix(tuple(tuple(self.rows[i][j] for j in cols) for i in rows))

    def _fractions(self) -> list[list[Fraction]]:
        out = []
        for r in self.rows:
            row = []
            for e in r:
                if isinstance(e, Poly):
                    e = e.constant_value()
                row.append(e)
            out.append(row)
        return out

    def rref(self) -> tuple[list[list[Fraction]], list[int]]:
        m = self._fractions()
        pivots = []
        r = 0
        for c in range(self.ncols):
            piv = next((i for i in range(r, self.nrows) if m[i][c] != 0), None)
            if piv is None:
                continue
            m[r], m[piv] = m[piv], m[r]
            inv = 1 / m[r][c]
            m[r] = [x * inv for x in m[r]]
            for i in range(self.nrows):
                if i != r and m[i][c] != 0:
                    f = m[i][c]
                    m[i] = [x - f * y for x, y in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
            if r == self.nrows:
                break
        return m, pivots

    def rank(self) -> int:
        return len(self.rref()[1])

    def kernel(self) -> list[tuple[Fraction, ...]]:
        m, pivots = self.rref()
        free = [c for c in range(self.ncols) if c not in pivots]
        basis = []
        for f in free:
            v = [Fraction(0)] * self.ncols
            v[f] = Fraction(1)
            for i, p in enumerate(pivots):
                v[p] = -m[i][f]
            basis.append(tuple(v))
        return basis

    def det(self) -> Entry:
        """Determinant by fraction-free Bareiss elimination."""
        n = self.nrows
        if n != self.ncols:
            raise ExactError("determinant of a non-square matrix")
        if n == 0:
            return Fraction(1)
        poly = self.is_poly
        m = [[Poly.lift(e) if poly else e for e in r] for r in self.rows]
        sign = 1
        prev = Poly.const(1) if poly else Fraction(1)
        for k in range(n - 1):
            if _is_zero(m[k][k]):
                swap = next((i for i in range(k + 1, n) if not _is_zero(m[i][k])), None)
                if swap is None:
                    return Poly() if poly else Fraction(0)
                m[k], m[swap] = m[swap], m[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    num = m[i][j] * m[k][k] - m[i][k] * m[k][j]
                    m[i][j] = num.exact_div(prev) if poly else num / prev
            prev = m[k][k]
        d = m[n - 1][n - 1]
        return -d if sign < 0 else d

    def inverse(self) -> "RatMatrix":
        n = self.nrows
        if n != self.ncols:
            raise ExactError("inverse of a non-square matrix")
        aug = RatMatrix(tuple(tuple(r) + tuple(Fraction(int(i == j)) for j in range(n))
                              for i, r in enumerate(self._fractions())))
        m, pivots = aug.rref()
        if pivots[:n] != list(range(n)):
            raise ExactError("matrix is singular")
        return RatMatrix(tuple(tuple(r[n:]) for r in m))

    def __str__(self) -> str:
        return "[" + "; ".join(", ".join(str(e) for e in r) for r in self.rows) + "]"


def leibniz_det(m: RatMatrix) -> Entry:
    """Permutation-expansion determinant, used as an independent cross-check."""
    from itertools import permutations

    n = m.nrows
    total = Poly() if m.is_poly else Fraction(0)
    for perm in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = Poly.const(1) if m.is_poly else Fraction(1)
        for i in range(n):
            term = term * m[i, perm[i]]
        total = total - term if inv % 2 else total + term
    return total


def solve_linear(m: RatMatrix, rhs: Sequence[PolyLike]) -> list:
    """Solve m x = rhs by Cramer's rule over the polynomial ring.

    Entries that are not polynomials come back as ``(numerator, denominator)``.
    """
    n = m.nrows
    if n != m.ncols or len(rhs) != n:
        raise ExactError("solve_linear needs a square system")
    a = m.map(Poly.lift)
    d = a.det()
    if d.is_zero():
        raise ExactError("singular matrix")
    b = [Poly.lift(x) for x in rhs]
    out = []
    for i in range(n):
        mi = RatMatrix(tuple(tuple(b[r] if j == i else a[r, j] for j in range(n)) for r in range(n)))
        num = mi.det()
        try:
            out.append(num.exact_div(d))
        except ExactError:
            out.append((num, d))
    return out
