"""Exploring bounds over weight space: grids, frontiers, domain membership, validation."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .exceptions import SawboundError
from .gmatrix import GMatrix
from .spectral import (
    EPS,
    CertifiedBound,
    lambda_at,
    lambda_many,
    mu_upper_bound,
    mu_upper_bound_many,
    require_primitive,
)


@dataclass(frozen=True)
class GridSpec:
    axes: tuple[tuple[float, float, int], ...]

    def __post_init__(self):
        for lo, hi, samples in self.axes:
            if lo <= 0 or hi < lo:
                raise ValueError(f"grid axis [{lo}, {hi}] must satisfy 0 < min <= max")
            if samples < 2:
                raise ValueError("each grid axis needs at least 2 samples")

    @classmethod
    def uniform(cls, d: int, lo: float, hi: float, samples: int) -> "GridSpec":
        return cls(((lo, hi, samples),) * d)

    def points(self) -> np.ndarray:
        """Grid points in row-major order (last axis varies fastest)."""
        axes = [np.linspace(lo, hi, k) for lo, hi, k in self.axes]
        return np.array(list(itertools.product(*axes)), dtype=float)


@dataclass(frozen=True)
class GridRow:
    z: tuple[float, ...]
    bound: CertifiedBound | None
    error: str | None = None


def grid_scan(g: GMatrix, spec: GridSpec, tol: float = 1e-12) -> list[GridRow]:
    require_primitive(g)
    if len(spec.axes) != g.d:
        raise ValueError(f"grid must have {g.d} axes")
    Z = spec.points()
    try:
        bounds = mu_upper_bound_many(g, Z, tol)
        return [GridRow(tuple(z), b) for z, b in zip(Z.tolist(), bounds)]
    except SawboundError:
        pass
    rows = []
    for z in Z.tolist():
        try:
            rows.append(GridRow(tuple(z), mu_upper_bound(g, z, tol)))
        except SawboundError as exc:
            rows.append(GridRow(tuple(z), None, str(exc)))
    return rows


@dataclass(frozen=True)
class FrontierPoint:
    direction: tuple[float, ...]
    z: tuple[float, ...]
    residual_low: float
    residual_high: float

    @property
    def residual(self) -> float:
        return max(abs(self.residual_low), abs(self.residual_high))


def ray_frontier(g: GMatrix, directions: Sequence[Sequence[float]], tol: float = 1e-12) -> list[FrontierPoint]:
    """Point where lambda_1 = 1 on each ray, via lambda_1(cz) = c^(n-m) lambda_1(z)."""
    require_primitive(g)
    U = np.asarray(directions, dtype=float)
    if U.ndim != 2 or U.shape[1] != g.d or np.any(U <= 0):
        raise ValueError(f"directions must be strictly positive vectors of length {g.d}")
    lams = lambda_many(g, U, tol)
    P = np.array([u * lam.value ** (-1.0 / g.block) for u, lam in zip(U, lams)])
    checks = lambda_many(g, P, tol)
    return [
        FrontierPoint(tuple(u), tuple(p), c.lower - 1.0, c.upper - 1.0)
        for u, p, c in zip(U.tolist(), P.tolist(), checks)
    ]


def frontier_by_bisection(g: GMatrix, direction: Sequence[float], tol: float = 1e-13) -> np.ndarray:
    """Frontier point on a ray found by bisection with a dense eigensolver.

    Independent of the scaling identity; used as a cross-check.
    """
    u = np.asarray(direction, dtype=float)

    def lam(c: float) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(g.evaluate(c * u)))))

    lo, hi = 0.0, 1.0
    while lam(hi) < 1.0:
        hi *= 2.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if lam(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) * u


def directions_2d(k: int) -> np.ndarray:
    """k unit vectors at evenly spaced angles strictly inside the positive quadrant."""
    theta = (np.arange(k) + 0.5) * (np.pi / 2) / k
    return np.column_stack([np.cos(theta), np.sin(theta)])


def directions_octant(k: int) -> np.ndarray:
    """k x k unit vectors over the open positive octant of the sphere."""
    ang = (np.arange(k) + 0.5) * (np.pi / 2) / k
    out = [
        (math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th))
        for th in ang for ph in ang
    ]
    return np.array(out)


def default_directions(d: int, k: int) -> np.ndarray:
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        return directions_2d(k)
    if d == 3:
        return directions_octant(k)
    raise ValueError("default direction sets exist only for d <= 3")


def domain_contains(g: GMatrix, x: Sequence[float], tol: float = 1e-12) -> bool | None:
    """Whether x lies in the certified convergence region of the generating function.

    True if lambda_1 at |x| is certified below 1, False if certified at or
    above 1, None when the enclosure straddles 1.  Zero coordinates are
    replaced by machine epsilon, which is sound by monotonicity.
    """
    require_primitive(g)
    z = np.abs(np.asarray(x, dtype=float))
    if z.shape != (g.d,) or not np.all(np.isfinite(z)):
        raise ValueError(f"expected a finite vector of length {g.d}")
    z = np.where(z == 0.0, EPS, z)
    lam = lambda_at(g, z, tol)
    if lam.upper < 1.0:
        return True
    if lam.lower >= 1.0:
        return False
    return None


# -- closed forms ----------------------------------------------------------

def _sq12(x, y):
    return 0.5 * (x + y + math.sqrt(x * x + 14 * x * y + y * y))


def _sq13(x, y):
    r = math.sqrt(x * x + 14 * x * y + y * y)
    return 2 ** -0.5 * (x * x + 8 * x * y + y * y + (x + y) * r) ** 0.5


def _sq14_saw(x, y):
    disc = (x**6 + 24 * x**5 * y + 136 * x**4 * y**2 + 254 * x**3 * y**3
            + 136 * x**2 * y**4 + 24 * x * y**5 + y**6)
    return 2 ** (-1 / 3) * (x**3 + 12 * x * y * (x + y) + y**3 + math.sqrt(disc)) ** (1 / 3)


def _sq14_sat(x, y):
    r = math.sqrt(x * x + 14 * x * y + y * y)
    return 2 ** (-1 / 3) * (x**3 + 12 * x * y * (x + y) + y**3 + (x * x + 5 * x * y + y * y) * r) ** (1 / 3)


def _xz12(x, z):
    return 0.5 * (3 * x + z + math.sqrt(9 * x * x + 26 * x * z + z * z))


def _xz13(x, z):
    r = math.sqrt(9 * x * x + 26 * x * z + z * z)
    return 2 ** -0.5 * (9 * x * x + 16 * x * z + z * z + (3 * x + z) * r) ** 0.5


def _tri13_saw(x, z):
    disc = 81 * x**4 + 182 * x**3 * z + 143 * x**2 * z**2 + 34 * x * z**3 + z**4
    return 2 ** -0.5 * (9 * x * x + 15 * x * z + z * z + math.sqrt(disc)) ** 0.5


def _hex12(x, z):
    return 0.5 * (x + math.sqrt(x * (x + 8 * z)))


def _hex13(x, z):
    return 2 ** -0.5 * (x * x + 4 * x * z + x * math.sqrt(x * (x + 8 * z))) ** 0.5


def _hex14(x, z):
    return 2 ** (-1 / 3) * (x**3 + 6 * x * x * z + x * (x + 2 * z) * math.sqrt(x * (x + 8 * z))) ** (1 / 3)


# row id -> (formula, lattice, scheme, mode, m, n)
CLOSED_FORMS: dict[str, tuple[Callable[[float, float], float], str, str, str, int, int]] = {
    "table1/saw/1-2": (_sq12, "square", "general", "saw", 1, 2),
    "table1/sat/1-2": (_sq12, "square", "general", "sat", 1, 2),
    "table1/saw/1-3": (_sq13, "square", "general", "saw", 1, 3),
    "table1/sat/1-3": (_sq13, "square", "general", "sat", 1, 3),
    "table1/saw/1-4": (_sq14_saw, "square", "general", "saw", 1, 4),
    "table1/sat/1-4": (_sq14_sat, "square", "general", "sat", 1, 4),
    "table2/saw/1-2": (_xz12, "cubic", "xy-equal", "saw", 1, 2),
    "table2/sat/1-2": (_xz12, "cubic", "xy-equal", "sat", 1, 2),
    "table2/saw/2-3": (_xz12, "cubic", "xy-equal", "saw", 2, 3),
    "table2/sat/2-3": (_xz12, "cubic", "xy-equal", "sat", 2, 3),
    "table2/saw/1-3": (_xz13, "cubic", "xy-equal", "saw", 1, 3),
    "table2/sat/1-3": (_xz13, "cubic", "xy-equal", "sat", 1, 3),
    "table3/saw/1-2": (_xz12, "triangular", "xz", "saw", 1, 2),
    "table3/sat/1-2": (_xz12, "triangular", "xz", "sat", 1, 2),
    "table3/saw/1-3": (_tri13_saw, "triangular", "xz", "saw", 1, 3),
    "table3/sat/1-3": (_xz13, "triangular", "xz", "sat", 1, 3),
    "table4/saw/1-2": (_hex12, "hexagonal", "xy-equal", "saw", 1, 2),
    "table4/sat/1-2": (_hex12, "hexagonal", "xy-equal", "sat", 1, 2),
    "table4/saw/1-3": (_hex13, "hexagonal", "xy-equal", "saw", 1, 3),
    "table4/sat/1-3": (_hex13, "hexagonal", "xy-equal", "sat", 1, 3),
    "table4/saw/1-4": (_hex14, "hexagonal", "xy-equal", "saw", 1, 4),
    "table4/sat/1-4": (_hex14, "hexagonal", "xy-equal", "sat", 1, 4),
}


def closed_form_oracle(row: str, z: Sequence[float]) -> float:
    """Evaluate a tabulated radical expression for the bound at weights z."""
    try:
        formula = CLOSED_FORMS[row][0]
    except KeyError:
        raise KeyError(f"unknown closed-form row {row!r}") from None
    if len(z) != 2:
        raise ValueError("closed forms take two weights")
    return formula(float(z[0]), float(z[1]))


def closed_form_row(g: GMatrix) -> str | None:
    key = (g.lattice_name, g.scheme, g.mode.value, g.m, g.n)
    for row, (_, *spec) in CLOSED_FORMS.items():
        if tuple(spec) == key:
            return row
    return None


# -- validation ------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    seed: int
    trials: int
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "ok": self.ok,
            "checks": [vars(c) for c in self.checks],
        }


def check_closed_form(g: GMatrix, row: str, Z: np.ndarray, slack: float = 1e-8) -> Check:
    bounds = mu_upper_bound_many(g, Z)
    worst = 0.0
    passed = True
    for z, b in zip(Z, bounds):
        err = abs(b.value - closed_form_oracle(row, z))
        worst = max(worst, err)
        if err > b.width + slack:
            passed = False
    return Check(f"closed-form {row}", passed, f"max |bound - oracle| = {worst:.3e}")


def check_scaling(g: GMatrix, Z: np.ndarray, C: np.ndarray, slack: float = 1e-9) -> Check:
    base = lambda_many(g, Z)
    scaled = lambda_many(g, Z * C[:, None])
    worst = 0.0
    passed = True
    for b, s, c in zip(base, scaled, C):
        f = c ** g.block
        err = abs(s.value - f * b.value)
        worst = max(worst, err)
        if err > s.width + f * b.width + slack:
            passed = False
    return Check("scaling identity", passed, f"max deviation = {worst:.3e}")


def check_reciprocal(g: GMatrix, slack: float = 1e-9) -> Check:
    ones = np.ones(g.d)
    bound = mu_upper_bound(g, ones)
    point = ray_frontier(g, [ones / math.sqrt(g.d)])[0]
    err = max(abs(p - 1.0 / bound.value) for p in point.z)
    return Check(
        "reciprocal at isotropic point",
        err <= slack + 1.0 / bound.lower - 1.0 / bound.upper,
        f"bound at ones = {bound.value:.15g}, frontier coordinate = {point.z[0]:.15g}",
    )


def validate(
    g: GMatrix,
    trials: int = 100,
    seed: int = 0,
    row: str | None = None,
) -> ValidationReport:
    """Randomized consistency checks of a matrix: closed form (when one is
    known or ``row`` is given), the scaling identity and the reciprocal
    relation at the isotropic point."""
    require_primitive(g)
    rng = np.random.default_rng(seed)
    report = ValidationReport(seed, trials)
    Z = 1.0 - rng.random((trials, g.d))  # in (0, 1]
    row = row or closed_form_row(g)
    if row is not None:
        if row not in CLOSED_FORMS:
            report.checks.append(Check(f"closed-form {row}", False, "unknown row id"))
        else:
            report.checks.append(check_closed_form(g, row, Z))
    C = 2.0 * (1.0 - rng.random(trials))  # in (0, 2]
    report.checks.append(check_scaling(g, 1.0 - rng.random((trials, g.d)), C))
    report.checks.append(check_reciprocal(g))
    return report


# -- CSV export ------------------------------------------------------------

def write_grid_csv(rows: Iterable[GridRow], labels: Sequence[str], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow([*labels, "bound", "bracket_low", "bracket_high"])
    for r in rows:
        if r.bound is None:
            w.writerow([*(repr(v) for v in r.z), "nan", "nan", "nan"])
        else:
            w.writerow([*(repr(v) for v in r.z), repr(r.bound.value), repr(r.bound.lower), repr(r.bound.upper)])


def write_frontier_csv(points: Iterable[FrontierPoint], labels: Sequence[str], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow([*(f"dir_{l}" for l in labels), *labels, "residual_low", "residual_high"])
    for p in points:
        w.writerow([*map(repr, p.direction), *map(repr, p.z), repr(p.residual_low), repr(p.residual_high)])


def grid_csv_text(rows: Iterable[GridRow], labels: Sequence[str]) -> str:
    buf = io.StringIO()
    write_grid_csv(rows, labels, buf)
    return buf.getvalue()
