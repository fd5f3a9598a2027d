"""Sparse multivariate polynomials with integer coefficients.

Only what the transfer matrix needs: addition, multiplication and exact
division by monomials, floating-point evaluation, and a canonical text
form.  Terms are kept in graded lexicographic order, highest first.
"""

from __future__ import annotations

import math
import re
from typing import Iterable, Mapping, Sequence

from .exceptions import InexactDivisionError

Monomial = tuple[int, ...]


def _order(exps: Monomial) -> tuple:
    return (sum(exps), exps)


class Poly:
    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Monomial, int] | Iterable[tuple[Monomial, int]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, int] = {}
        for exps, c in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError(f"monomial {exps} does not have {nvars} exponents")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            acc[exps] = acc.get(exps, 0) + int(c)
        self.nvars = nvars
        self._terms = tuple(sorted(((e, c) for e, c in acc.items() if c), key=lambda t: _order(t[0]), reverse=True))
        self._hash = None

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: int = 1) -> "Poly":
        return cls(len(exps), {tuple(exps): coeff})

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @property
    def terms(self) -> tuple[tuple[Monomial, int], ...]:
        return self._terms

    def as_dict(self) -> dict[Monomial, int]:
        return dict(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, self._terms))
        return self._hash

    def __add__(self, other: "Poly") -> "Poly":
        return poly_add(self, other)

    def __repr__(self) -> str:
        return f"Poly({format_poly(self)!r})"

    def degrees(self) -> set[int]:
        return {sum(e) for e, _ in self._terms}

    def coefficient_sum(self) -> int:
        return sum(c for _, c in self._terms)

    def __call__(self, z: Sequence[float]) -> float:
        return poly_eval(self, z)


def _check_vars(a: Poly, n: int) -> None:
    if a.nvars != n:
        raise ValueError(f"variable count mismatch: {a.nvars} vs {n}")


def poly_add(a: Poly, b: Poly) -> Poly:
    _check_vars(b, a.nvars)
    return Poly(a.nvars, list(a.terms) + list(b.terms))


def poly_mul_monomial(a: Poly, m: Sequence[int], c: int = 1) -> Poly:
    _check_vars(a, len(m))
    return Poly(a.nvars, [(tuple(x + y for x, y in zip(e, m)), k * c) for e, k in a.terms])


def poly_div_monomial(a: Poly, m: Sequence[int]) -> Poly:
    _check_vars(a, len(m))
    out = []
    for e, k in a.terms:
        q = tuple(x - y for x, y in zip(e, m))
        if any(x < 0 for x in q):
            raise InexactDivisionError(f"term with exponents {e} is not divisible by {tuple(m)}")
        out.append((q, k))
    return Poly(a.nvars, out)


def poly_eval(a: Poly, z: Sequence[float]) -> float:
    """Evaluate at a positive point, summing terms in canonical order."""
    if len(z) != a.nvars:
        raise ValueError(f"expected {a.nvars} values, got {len(z)}")
    total = 0.0
    for e, c in a.terms:
        total += c * math.prod(zi ** k for zi, k in zip(z, e))
    if math.isinf(total) or math.isnan(total):
        raise OverflowError("polynomial evaluation overflowed")
    return total


def _default_labels(n: int) -> list[str]:
    return [f"z{i + 1}" for i in range(n)]


def format_poly(a: Poly, labels: Sequence[str] | None = None) -> str:
    """Canonical text: ``c * v1^e1 ... vd^ed`` terms joined by `` + ``."""
    labels = list(labels) if labels is not None else _default_labels(a.nvars)
    if not a.terms:
        return "0"
    parts = []
    for e, c in a.terms:
        parts.append(f"{c} * " + " ".join(f"{v}^{k}" for v, k in zip(labels, e)))
    return " + ".join(parts)


_TERM = re.compile(r"^(-?\d+) \* (.+)$")


def parse_poly(text: str, labels: Sequence[str]) -> Poly:
    labels = list(labels)
    n = len(labels)
    text = text.strip()
    if text == "0":
        return Poly(n)
    terms = []
    for chunk in text.split(" + "):
        match = _TERM.match(chunk.strip())
        if not match:
            raise ValueError(f"malformed term {chunk!r}")
        powers = match.group(2).split()
        if len(powers) != n:
            raise ValueError(f"term {chunk!r} must list all {n} variables")
        exps = []
        for label, p in zip(labels, powers):
            name, caret, k = p.partition("^")
            if name != label or not caret or not k.isdigit():
                raise ValueError(f"malformed power {p!r} (expected {label}^k)")
            exps.append(int(k))
        terms.append((tuple(exps), int(match.group(1))))
    poly = Poly(n, terms)
    if format_poly(poly, labels) != text:
        raise ValueError("polynomial text is not in canonical form")
    return poly
