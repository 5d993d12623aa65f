"""Sparse multivariate polynomials with integer coefficients, and matrices of them.

Variables are identified by strings (fading-variable ids such as ``"h3"``).
A monomial is a sorted tuple of ``(var, exponent)`` pairs; the constant
monomial is ``()``.  Coefficients are Python ints, so evaluation is exact
over prime fields and vectorised over numpy arrays for complex samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Mapping

import numpy as np

Monomial = tuple[tuple[str, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for var, e in b:
        exps[var] = exps.get(var, 0) + e
    return tuple(sorted(exps.items()))


class Poly:
    """Immutable sparse polynomial over the integers."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, int] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            if c:
                clean[tuple(sorted(mono))] = clean.get(tuple(sorted(mono)), 0) + int(c)
        self._terms = {m: c for m, c in clean.items() if c}
        self._hash = None

    # construction -------------------------------------------------------
    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls({((name, 1),): 1})

    @classmethod
    def const(cls, c: int) -> "Poly":
        return cls({(): c})

    @classmethod
    def zero(cls) -> "Poly":
        return cls()

    @classmethod
    def product(cls, names: Iterable[str]) -> "Poly":
        out = cls.const(1)
        for n in names:
            out = out * cls.var(n)
        return out

    # basic queries -------------------------------------------------------
    @property
    def terms(self) -> dict[Monomial, int]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def variables(self) -> frozenset[str]:
        return frozenset(v for mono in self._terms for v, _ in mono)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return max(sum(e for _, e in mono) for mono in self._terms)

    def degree_in(self, var: str) -> int:
        return max((dict(mono).get(var, 0) for mono in self._terms), default=0)

    def has_constant_term(self) -> bool:
        return () in self._terms

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    # arithmetic ------------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, np.integer)):
            return Poly.const(int(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Monomial, int] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = _mono_mul(ma, mb)
                out[m] = out.get(m, 0) + ca * cb
        return Poly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # evaluation -------------------------------------------------------------
    def evaluate(self, values: Mapping[str, object]):
        """Evaluate at complex scalars or broadcastable numpy arrays."""
        total = 0
        for mono, c in self._terms.items():
            term = c
            for var, e in mono:
                v = values[var]
                term = term * (v if e == 1 else v**e)
            total = total + term
        return total

    def evaluate_mod(self, values: Mapping[str, int], p: int) -> int:
        total = 0
        for mono, c in self._terms.items():
            term = c % p
            for var, e in mono:
                term = term * pow(values[var] % p, e, p) % p
            total = (total + term) % p
        return total

    def substitute(self, values: Mapping[str, "Poly"]) -> "Poly":
        out = Poly()
        for mono, c in self._terms.items():
            term = Poly.const(c)
            for var, e in mono:
                base = values.get(var, Poly.var(var))
                for _ in range(e):
                    term = term * base
            out = out + term
        return out

    # serialisation -----------------------------------------------------------
    def to_json(self) -> list:
        return [[c, [[v, e] for v, e in mono]] for mono, c in sorted(self._terms.items())]

    @classmethod
    def from_json(cls, data: list) -> "Poly":
        return cls({tuple((v, int(e)) for v, e in mono): int(c) for c, mono in data})

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, c in sorted(self._terms.items()):
            body = "*".join(v if e == 1 else f"{v}^{e}" for v, e in mono)
            if not body:
                parts.append(str(c))
            elif c == 1:
                parts.append(body)
            elif c == -1:
                parts.append("-" + body)
            else:
                parts.append(f"{c}*{body}")
        return " + ".join(parts).replace("+ -", "- ")


ZERO = Poly()


@dataclass(frozen=True)
class PolyMatrix:
    """Sparse matrix with :class:`Poly` entries; absent entries are structural zeros."""

    rows: int
    cols: int
    entries: Mapping[tuple[int, int], Poly] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (i, j), p in dict(self.entries).items():
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise IndexError(f"entry ({i}, {j}) outside {self.rows}x{self.cols}")
            if not isinstance(p, Poly):
                p = Poly.const(p) if isinstance(p, int) else p
            if not p.is_zero():
                clean[(i, j)] = p
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_rows(cls, data: list[list]) -> "PolyMatrix":
        rows = len(data)
        cols = len(data[0]) if rows else 0
        ent = {}
        for i, row in enumerate(data):
            if len(row) != cols:
                raise ValueError("ragged rows")
            for j, x in enumerate(row):
                if isinstance(x, str):
                    x = Poly.var(x)
                elif isinstance(x, int):
                    x = Poly.const(x)
                ent[(i, j)] = x
        return cls(rows, cols, ent)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "PolyMatrix":
        return cls(rows, cols, {})

    @classmethod
    def identity(cls, n: int) -> "PolyMatrix":
        return cls(n, n, {(i, i): Poly.const(1) for i in range(n)})

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij: tuple[int, int]) -> Poly:
        return self.entries.get(ij, ZERO)

    def to_rows(self) -> list[list[Poly]]:
        return [[self[i, j] for j in range(self.cols)] for i in range(self.rows)]

    def support(self) -> set[tuple[int, int]]:
        return set(self.entries)

    def variables(self) -> frozenset[str]:
        out: set[str] = set()
        for p in self.entries.values():
            out |= p.variables()
        return frozenset(out)

    def max_degree(self) -> int:
        return max((p.degree() for p in self.entries.values()), default=0)

    def is_zero(self) -> bool:
        return not self.entries

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(self.cols, self.rows, {(j, i): p for (i, j), p in self.entries.items()})

    def submatrix(self, rows: Iterable[int], cols: Iterable[int]) -> "PolyMatrix":
        rows, cols = list(rows), list(cols)
        ri = {r: a for a, r in enumerate(rows)}
        ci = {c: b for b, c in enumerate(cols)}
        ent = {(ri[i], ci[j]): p for (i, j), p in self.entries.items() if i in ri and j in ci}
        return PolyMatrix(len(rows), len(cols), ent)

    def restrict(self, keep) -> "PolyMatrix":
        """Copy keeping only entries ``(i, j)`` for which ``keep(i, j)`` holds."""
        return PolyMatrix(self.rows, self.cols,
                          {ij: p for ij, p in self.entries.items() if keep(*ij)})

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        ent = dict(self.entries)
        for ij, p in other.entries.items():
            ent[ij] = ent.get(ij, ZERO) + p
        return PolyMatrix(self.rows, self.cols, ent)

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        by_row: dict[int, list[tuple[int, Poly]]] = {}
        for (k, j), p in other.entries.items():
            by_row.setdefault(k, []).append((j, p))
        ent: dict[tuple[int, int], Poly] = {}
        for (i, k), a in self.entries.items():
            for j, b in by_row.get(k, ()):
                ent[(i, j)] = ent.get((i, j), ZERO) + a * b
        return PolyMatrix(self.rows, other.cols, ent)

    def det(self) -> Poly:
        """Symbolic determinant (Leibniz expansion over the support); small matrices only."""
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return Poly.const(1)
        if n > 8:
            raise ValueError("symbolic determinant limited to 8x8")
        total = ZERO
        for perm in permutations(range(n)):
            term = Poly.const(_perm_sign(perm))
            for i, j in enumerate(perm):
                e = self.entries.get((i, j))
                if e is None:
                    break
                term = term * e
            else:
                total = total + term
        return total

    # evaluation -------------------------------------------------------------
    def evaluate(self, values: Mapping[str, object]) -> np.ndarray:
        """Numeric matrix; array-valued ``values`` of shape ``(S,)`` give ``(S, rows, cols)``."""
        batch = None
        for v in values.values():
            if isinstance(v, np.ndarray) and v.ndim:
                batch = v.shape
                break
        shape = (self.rows, self.cols) if batch is None else batch + (self.rows, self.cols)
        out = np.zeros(shape, dtype=complex)
        for (i, j), p in self.entries.items():
            out[..., i, j] = p.evaluate(values)
        return out

    def evaluate_mod(self, values: Mapping[str, int], p: int) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), poly in self.entries.items():
            out[i][j] = poly.evaluate_mod(values, p)
        return out

    # serialisation -------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [
                {"row": i, "col": j, "monomials": p.to_json()}
                for (i, j), p in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PolyMatrix":
        ent = {(e["row"], e["col"]): Poly.from_json(e["monomials"]) for e in data["entries"]}
        return cls(data["rows"], data["cols"], ent)

    def __repr__(self):
        body = "; ".join(", ".join(repr(self[i, j]) for j in range(self.cols)) for i in range(self.rows))
        return f"PolyMatrix([{body}])"


def _perm_sign(perm: tuple[int, ...]) -> int:
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def block_diag(blocks: Iterable[PolyMatrix]) -> PolyMatrix:
    ent, r0, c0 = {}, 0, 0
    for b in blocks:
        for (i, j), p in b.entries.items():
            ent[(r0 + i, c0 + j)] = p
        r0 += b.rows
        c0 += b.cols
    return PolyMatrix(r0, c0, ent)


def rayleigh_block(rows: int, cols: int, prefix: str) -> PolyMatrix:
    """Matrix of distinct fading variables ``{prefix}_{i}_{j}``."""
    return PolyMatrix(rows, cols, {(i, j): Poly.var(f"{prefix}_{i}_{j}")
                                   for i in range(rows) for j in range(cols)})
