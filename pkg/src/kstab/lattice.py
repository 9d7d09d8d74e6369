"""Divisor-class lattices and divisor paths with polynomial coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Mapping, Sequence

from .exact import ExactError, Poly, PolyLike, Q, RatMatrix, parse_poly


class LatticeError(ValueError):
    """Raised for malformed lattices or mismatched bases."""


def _parse_monomial_key(key: str, basis: Sequence[str]) -> list[int]:
    """Read ``"H1*F^2"`` or ``"F^3"`` as a multiset of basis indices."""
    idx = []
    for factor in key.replace("**", "^").replace(" ", "").split("*"):
        name, _, exp = factor.partition("^")
        if name not in basis:
            raise LatticeError(f"unknown class {name!r} in {key!r}")
        idx.extend([list(basis).index(name)] * (int(exp) if exp else 1))
    return idx


@dataclass(frozen=True)
class ThreefoldLattice:
    """Basis of divisor classes with a symmetric trilinear intersection form."""

    basis: tuple[str, ...]
    triples: tuple[tuple[tuple[int, int, int], Fraction], ...]
    _full: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if len(set(self.basis)) != len(self.basis):
            raise LatticeError("duplicate basis names")
        full = {}
        for key, val in self.triples:
            if tuple(sorted(key)) != tuple(key):
                raise LatticeError(f"triple key {key} is not sorted")
            val = Q(val)
            if val:
                for perm in set(permutations(key)):
                    full[perm] = val
        object.__setattr__(self, "_full", full)

    @classmethod
    def from_table(cls, basis: Sequence[str], values: Mapping[str, object],
                   zero_pairs: Sequence[Sequence[str]] = ()) -> "ThreefoldLattice":
        basis = tuple(basis)
        table: dict = {}
        for key, val in values.items():
            idx = _parse_monomial_key(key, basis)
            if len(idx) != 3:
                raise LatticeError(f"{key!r} is not a triple product")
            k = tuple(sorted(idx))
            v = Q(val)
            if k in table and table[k] != v:
                raise LatticeError(f"conflicting values for {key!r}")
            table[k] = v
        # a pair stated to meet in zero kills every triple containing it
        for pair in zero_pairs:
            a, b = (basis.index(n) for n in pair)
            for k, v in table.items():
                rest = list(k)
                if a in rest:
                    rest.remove(a)
                    if b in rest and v:
                        raise LatticeError(f"triple {k} contradicts zero pair {tuple(pair)}")
        return cls(basis, tuple(sorted((k, v) for k, v in table.items() if v)))

    def index(self, name: str) -> int:
        try:
            return self.basis.index(name)
        except ValueError:
            raise LatticeError(f"unknown class {name!r}") from None

    def triple(self, i: int, j: int, k: int) -> Fraction:
        return self._full.get((i, j, k), Fraction(0))

    def nonzero_triples(self):
        return self._full.items()


@dataclass(frozen=True)
class SurfaceLattice:
    """Basis of curve classes with a symmetric Gram matrix."""

    basis: tuple[str, ...]
    gram: RatMatrix

    def __post_init__(self):
        n = len(self.basis)
        if len(set(self.basis)) != n:
            raise LatticeError("duplicate basis names")
        if self.gram.nrows != n or self.gram.ncols != n:
            raise LatticeError("gram size does not match the basis")
        if self.gram.transpose() != self.gram:
            raise LatticeError("gram matrix is not symmetric")

    @classmethod
    def from_table(cls, basis: Sequence[str], values: Mapping[str, object]) -> "SurfaceLattice":
        basis = tuple(basis)
        n = len(basis)
        g = [[Fraction(0)] * n for _ in range(n)]
        for key, val in values.items():
            idx = _parse_monomial_key(key, basis)
            if len(idx) != 2:
                raise LatticeError(f"{key!r} is not a pair product")
            i, j = idx
            g[i][j] = g[j][i] = Q(val)
        return cls(basis, RatMatrix.of(g))

    def index(self, name: str) -> int:
        try:
            return self.basis.index(name)
        except ValueError:
            raise LatticeError(f"unknown class {name!r}") from None

    def pair(self, i: int, j: int) -> Fraction:
        return self.gram[i, j]

    def dot(self, x: Sequence, y: Sequence):
        """Intersection of two coefficient vectors (Fractions or Polys)."""
        xs = [_plain(a) for a in x]
        ys = [_plain(b) for b in y]
        total = Fraction(0)
        for i, a in enumerate(xs):
            if a == 0:
                continue
            # row sum first, so polynomial products happen once per row
            row = Fraction(0)
            for j, b in enumerate(ys):
                g = self.gram[i, j]
                if g and b != 0:
                    row = row + b * g
            if row != 0:
                total = total + a * row
        return total


def _plain(c):
    """Constant polynomials as Fractions; other entries unchanged."""
    if isinstance(c, Poly) and c.is_constant():
        return c.constant_value()
    return c


Lattice = ThreefoldLattice | SurfaceLattice


@dataclass(frozen=True)
class DivisorPath:
    """A divisor whose coefficients are polynomials in parameters such as u, v."""

    basis: tuple[str, ...]
    coeffs: tuple[Poly, ...]

    def __post_init__(self):
        if len(self.coeffs) != len(self.basis):
            raise LatticeError("one coefficient per basis class is required")
        object.__setattr__(self, "coeffs", tuple(Poly.lift(c) for c in self.coeffs))

    @classmethod
    def zero(cls, basis: Sequence[str]) -> "DivisorPath":
        return cls(tuple(basis), tuple(Poly() for _ in basis))

    @classmethod
    def unit(cls, basis: Sequence[str], name: str) -> "DivisorPath":
        basis = tuple(basis)
        if name not in basis:
            raise LatticeError(f"unknown class {name!r}")
        return cls(basis, tuple(Poly.const(int(b == name)) for b in basis))

    @classmethod
    def from_vector(cls, basis: Sequence[str], vec: Sequence[PolyLike]) -> "DivisorPath":
        return cls(tuple(basis), tuple(Poly.lift(x) for x in vec))

    @classmethod
    def parse(cls, text: str, basis: Sequence[str],
              classes: Mapping[str, "DivisorPath"] | None = None) -> "DivisorPath":
        """Parse an expression linear in the class names, e.g. ``"(3-u)*H - E1"``.

        ``classes`` supplies named combinations such as ``S1 = H - E1 - F``.
        """
        basis = tuple(basis)
        env = {}
        for name, path in (classes or {}).items():
            if path.basis != basis:
                raise LatticeError(f"class {name!r} lives on another basis")
            env[name] = sum((c * Poly.var(b) for b, c in zip(basis, path.coeffs)), Poly())
        try:
            p = parse_poly(text, env)
        except ExactError as exc:
            raise LatticeError(str(exc)) from None
        coeffs = []
        for b in basis:
            part = p.coefficients_in(b)
            if any(e > 1 for e in part):
                raise LatticeError(f"{text!r} is not linear in {b}")
            c = part.get(1, Poly())
            if any(v in basis for v in c.variables):
                raise LatticeError(f"{text!r} has a product of classes")
            coeffs.append(c)
            p = p - c * Poly.var(b)
        if not p.is_zero():
            raise LatticeError(f"{text!r} has a term without a class: {p}")
        return cls(basis, tuple(coeffs))

    def _check(self, other: "DivisorPath"):
        if self.basis != other.basis:
            raise LatticeError("divisor paths live on different bases")

    def __add__(self, other: "DivisorPath") -> "DivisorPath":
        self._check(other)
        return DivisorPath(self.basis, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "DivisorPath") -> "DivisorPath":
        self._check(other)
        return DivisorPath(self.basis, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "DivisorPath":
        return DivisorPath(self.basis, tuple(-a for a in self.coeffs))

    def scale(self, c: PolyLike) -> "DivisorPath":
        c = Poly.lift(c)
        return DivisorPath(self.basis, tuple(c * a for a in self.coeffs))

    def coeff(self, name: str) -> Poly:
        return self.coeffs[self.basis.index(name)]

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted({v for c in self.coeffs for v in c.variables}))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def substitute(self, mapping: Mapping[str, object]) -> "DivisorPath":
        return DivisorPath(self.basis, tuple(c.substitute(mapping) for c in self.coeffs))

    def constant_vector(self) -> tuple[Fraction, ...]:
        return tuple(c.constant_value() for c in self.coeffs)

    def __str__(self) -> str:
        parts = []
        for b, c in zip(self.basis, self.coeffs):
            if c.is_zero():
                continue
            if c == 1:
                parts.append(b)
            elif c == -1:
                parts.append(f"-{b}")
            elif c.is_constant() or len(c.terms) == 1 and not str(c).startswith("-"):
                parts.append(f"{c}*{b}")
            else:
                parts.append(f"({c})*{b}")
        if not parts:
            return "0"
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out


@dataclass(frozen=True)
class CurveFunctional:
    """A curve class seen only through its pairing with divisor classes."""

    name: str
    basis: tuple[str, ...]
    pairing: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.pairing) != len(self.basis):
            raise LatticeError("pairing length must equal the basis size")
        object.__setattr__(self, "pairing", tuple(Q(x) for x in self.pairing))

    @classmethod
    def explicit(cls, name: str, basis: Sequence[str], values: Mapping[str, object]) -> "CurveFunctional":
        basis = tuple(basis)
        unknown = set(values) - set(basis)
        if unknown:
            raise LatticeError(f"unknown classes {sorted(unknown)} in functional {name!r}")
        return cls(name, basis, tuple(Q(values.get(b, 0)) for b in basis))

    @classmethod
    def product(cls, lat: ThreefoldLattice, name: str, a: DivisorPath, b: DivisorPath) -> "CurveFunctional":
        """The complete-intersection curve a.b, paired through the triple form."""
        vals = []
        for i in range(len(lat.basis)):
            e = DivisorPath.unit(lat.basis, lat.basis[i])
            vals.append(triple_eval(lat, e, a, b).constant_value())
        return cls(name, lat.basis, tuple(vals))


def triple_eval(lat: ThreefoldLattice, d1: DivisorPath, d2: DivisorPath, d3: DivisorPath) -> Poly:
    for d in (d1, d2, d3):
        if d.basis != lat.basis:
            raise LatticeError("divisor path does not match the lattice basis")
    total = Poly()
    for (i, j, k), val in lat.nonzero_triples():
        a, b, c = d1.coeffs[i], d2.coeffs[j], d3.coeffs[k]
        if a and b and c:
            total = total + (a * b * c).scale(val)
    return total


def cube(lat: ThreefoldLattice, d: DivisorPath) -> Poly:
    return triple_eval(lat, d, d, d)


def pair_eval(lat: SurfaceLattice, c1: DivisorPath, c2: DivisorPath) -> Poly:
    for d in (c1, c2):
        if d.basis != lat.basis:
            raise LatticeError("divisor path does not match the surface basis")
    return Poly.lift(lat.dot(c1.coeffs, c2.coeffs))


def curve_pair(c: CurveFunctional, d: DivisorPath) -> Poly:
    if c.basis != d.basis:
        raise LatticeError(f"functional {c.name!r} does not match the divisor basis")
    total = Poly()
    for x, a in zip(c.pairing, d.coeffs):
        if x:
            total = total + a.scale(x)
    return total


@dataclass(frozen=True)
class Restriction:
    """Linear map from threefold classes to surface classes."""

    source: tuple[str, ...]
    target: tuple[str, ...]
    images: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if len(self.images) != len(self.source) or any(len(r) != len(self.target) for r in self.images):
            raise LatticeError("restriction matrix dimensions do not match the bases")
        object.__setattr__(self, "images", tuple(tuple(Q(x) for x in r) for r in self.images))

    @classmethod
    def parse(cls, source: Sequence[str], target: Sequence[str],
              table: Mapping[str, str]) -> "Restriction":
        source, target = tuple(source), tuple(target)
        unknown = set(table) - set(source)
        if unknown:
            raise LatticeError(f"restriction names unknown classes {sorted(unknown)}")
        rows = []
        for b in source:
            img = DivisorPath.parse(str(table.get(b, "0")), target)
            if img.variables:
                raise LatticeError(f"restriction of {b} must be constant")
            rows.append(img.constant_vector())
        return cls(source, target, tuple(rows))


def restrict(d: DivisorPath, r: Restriction) -> DivisorPath:
    if d.basis != r.source:
        raise LatticeError("divisor path does not match the restriction source")
    out = [Poly() for _ in r.target]
    for c, row in zip(d.coeffs, r.images):
        if c.is_zero():
            continue
        for j, x in enumerate(row):
            if x:
                out[j] = out[j] + c.scale(x)
    return DivisorPath(r.target, tuple(out))
