"""Kotecky-Preiss certification for the anisotropic circuit model on Z^2.

Circuits carry weight eps^(horizontal edges) * alpha^(vertical edges) and
the test function a(gamma) = kpT * |gamma|.  The criterion follows once the
weighted sum of circuits through a fixed edge, evaluated at
(|eps| e^kpT, |alpha| e^kpT), is at most kpT.  That sum is dominated by a
sum of self-avoiding trails from one endpoint of the edge, bounded here by
exact enumeration up to length L plus a geometric tail controlled by the
transfer matrix.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import HypothesisError, SawboundError
from .gmatrix import GMatrix
from .lattice import builtin_lattice
from .poly import Poly, poly_eval
from .spectral import EPS, entry_rel_error, is_primitive, lambda_at, structure_matrix
from .walks import Mode, count_by_weight

# circuits on Z^2 use at least two horizontal and two vertical edges
CIRCUIT_MIN_COUNTS = (2, 2)


def _up(x: float, ops: int = 1) -> float:
    """Round a nonnegative quantity upward past ``ops`` floating-point operations."""
    return float(np.nextafter(x * (1.0 + (ops + 1) * EPS), np.inf))


@dataclass(frozen=True)
class KPInstance:
    epsilon: float
    alpha: float
    kpT: float

    def __post_init__(self):
        if not self.kpT > 0:
            raise ValueError("kpT must be positive")

    @property
    def weights(self) -> tuple[float, float]:
        e = math.exp(self.kpT)
        return (abs(self.epsilon) * e, abs(self.alpha) * e)


@dataclass(frozen=True)
class CertifiedAnchoredBound:
    exact_partial: float
    tail_bound: float
    total: float
    L: int
    converged: bool
    q0: int | None = None
    rho: float | None = None
    scale_point: tuple[float, ...] | None = None


def _check_square_sat(g: GMatrix) -> None:
    if g.lattice_name != "square" or g.d != 2 or g.mode is not Mode.SAT:
        raise ValueError("anchored bounds need a square-lattice SAT matrix")
    if not is_primitive(structure_matrix(g)):
        raise HypothesisError("matrix is not primitive")


def exact_partial_polys(
    L: int, min_counts: Sequence[int] | None = None
) -> list[Poly]:
    """Weight polynomials of square-lattice SATs from the origin, lengths 0..L."""
    hist = count_by_weight(builtin_lattice("square"), L, 0, Mode.SAT, min_counts=min_counts)
    return [Poly(2, h) for h in hist]


def _partial_sum(polys: Sequence[Poly], z: Sequence[float]) -> float:
    total = 0.0
    for p in polys[1:]:
        total += poly_eval(p, z)
    return total


def _positive_weighting(G: np.ndarray) -> np.ndarray:
    """Approximate Perron vector of G, normalized to max 1; ones if unusable."""
    vals, vecs = np.linalg.eig(G)
    h = np.abs(np.real(vecs[:, int(np.argmax(np.real(vals)))]))
    if not np.all(np.isfinite(h)) or h.min() <= 1e-12 * h.max():
        return np.ones(G.shape[0])
    return h / h.max()


def _geometric_tail(
    g: GMatrix, y: Sequence[float], L: int, max_blocks: int, short: Sequence[float]
) -> tuple[float, int, float] | None:
    """Upper bound on sum_{l > L} c_l(y), or None if no contracting block is found.

    ``short[j]`` is c_j(y) for 0 <= j < n - m (c_0 = 1).  With p_r the
    weighted size of class r, c_{m+qs} <= p . G^q 1.  For a positive
    weighting h, let rho be the largest row sum of D^-1 G^q0 D, D = diag(h);
    once rho < 1, G^(a q0 + j) 1 <= rho^a G^j h / min(h).  Lengths between
    block boundaries use c_{l+j} <= c_l c_j.
    """
    t, s, m = g.t, g.block, g.m
    grow = (t + 2) * EPS
    G = g.evaluate(y) * (1.0 + entry_rel_error(g) + 2 * EPS)
    h = _positive_weighting(G)
    hmin = float(h.min())
    p = np.array([
        _up(c.size * math.prod(yi ** e for yi, e in zip(y, c.weight)), 4)
        for c in g.partition.classes
    ])
    ones = np.ones(t)
    powers = [np.eye(t)]
    q0 = None
    for q in range(1, max_blocks + 1):
        powers.append((powers[-1] @ G) * (1.0 + grow))
        scaled = (powers[-1] @ h) / h * (1.0 + grow)
        rho = float(scaled.max()) * (1.0 + grow)
        if rho < 1.0:
            q0 = q
            break
    if q0 is None:
        return None
    exact = [float(p @ (P @ ones)) * (1.0 + 2 * grow) for P in powers[:q0]]
    via_h = [float(p @ (P @ h)) / hmin * (1.0 + 3 * grow) for P in powers[:q0]]
    S = math.fsum(short) * (1.0 + s * EPS)

    def bound(q: int) -> float:
        a, j = divmod(q, q0)
        if a == 0:
            return exact[j]
        return rho ** a * via_h[j] * (1.0 + (a + 2) * EPS)

    # blocks below A*q0 explicitly, the rest as a geometric series
    A = (L - m) // (s * q0) + 2
    tail = 0.0
    for q in range(A * q0):
        base = m + q * s
        for j in range(s):
            if base + j > L:
                tail += bound(q) * short[j] * (1.0 + 2 * EPS)
    series = rho ** A * math.fsum(via_h) * S / ((1.0 - rho) * (1.0 - 4 * EPS))
    tail = _up(tail + series, 4 * A * q0 * s + 8)
    return tail, q0, rho


def anchored_sat_bound(
    g: GMatrix,
    z: Sequence[float],
    L: int = 8,
    max_blocks: int = 64,
    *,
    min_counts: Sequence[int] | None = None,
    scale_point: Sequence[float] | None = None,
    polys: Sequence[Poly] | None = None,
) -> CertifiedAnchoredBound:
    """Rigorous upper bound on the weighted sum of SATs of length >= 1 from a vertex.

    ``min_counts`` restricts the sum to trails with at least that many
    horizontal and vertical edges.  The tail of the restricted sum is then
    bounded at ``scale_point`` (a coordinate-wise larger point, default z)
    and rescaled by prod (z_i / y_i)^min_i.
    """
    _check_square_sat(g)
    z = tuple(float(v) for v in z)
    if len(z) != 2 or not all(v > 0 and math.isfinite(v) for v in z):
        raise ValueError("z must be a strictly positive pair")
    if L < g.n:
        raise ValueError(f"L must be at least n = {g.n}")
    y = z if scale_point is None else tuple(float(v) for v in scale_point)
    if any(yi < zi for yi, zi in zip(y, z)):
        raise ValueError("scale point must dominate z coordinate-wise")
    lam = lambda_at(g, y)
    if lam.upper >= 1.0:
        raise HypothesisError(f"lambda_1 at {y} is not certified below 1 (upper {lam.upper:.6g})")

    if polys is None:
        polys = exact_partial_polys(L, min_counts)
    exact = _partial_sum(polys[: L + 1], z)
    # rounding allowance of the exact partial sum
    n_terms = sum(len(p) for p in polys)
    partial_err = exact * (n_terms + 8 + 2 * L) * EPS

    if g.block > 1:
        short_polys = exact_partial_polys(g.block - 1)
        short = [1.0] + [_up(poly_eval(p, y), 16) for p in short_polys[1:]]
    else:
        short = [1.0]
    res = _geometric_tail(g, y, L, max_blocks, short)
    if res is None:
        return CertifiedAnchoredBound(exact, math.inf, math.inf, L, False, None, None, y)
    tail, q0, rho = res
    if min_counts is not None:
        factor = math.prod((zi / yi) ** k for zi, yi, k in zip(z, y, min_counts))
        tail = _up(tail * factor, 8)
    tail_bound = _up(tail + partial_err)
    total = _up(exact + tail_bound)
    return CertifiedAnchoredBound(exact, tail_bound, total, L, True, q0, rho, y)


def _frontier_x(g: GMatrix, z2: float, start: float, iters: int = 60) -> float | None:
    """Largest-ish horizontal weight with certified lambda_1(x, z2) < 1, by bisection."""
    if lambda_at(g, (start, z2)).upper >= 1.0:
        return None
    lo, hi = start, max(2 * start, 1e-3)
    while lambda_at(g, (hi, z2)).upper < 1.0:
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if lambda_at(g, (mid, z2)).upper < 1.0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class KPResult:
    verdict: bool | None
    certificate: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.verdict)


def kp_check(
    inst: KPInstance,
    g: GMatrix,
    L: int = 8,
    *,
    max_blocks: int = 64,
    circuits_only: bool = True,
    candidates: int = 20,
    polys: Sequence[Poly] | None = None,
) -> KPResult:
    """Certify the Kotecky-Preiss criterion for one (epsilon, alpha, kpT).

    Returns verdict True only when the anchored upper bound is at most kpT;
    False when the bound exceeds kpT; None when no bound could be formed.
    With ``circuits_only`` the sum is restricted to trails that could close
    into circuits, which is what makes the bound vanish as epsilon -> 0.
    """
    z = tuple(max(w, EPS) for w in inst.weights)
    cert: dict = {
        "epsilon": inst.epsilon,
        "alpha": inst.alpha,
        "kpT": inst.kpT,
        "z": z,
        "L": L,
        "circuits_only": circuits_only,
    }
    min_counts = CIRCUIT_MIN_COUNTS if circuits_only else None
    try:
        _check_square_sat(g)
        x_max = _frontier_x(g, z[1], z[0])
    except (SawboundError, ValueError) as exc:
        cert.update(verdict=None, reason=str(exc))
        return KPResult(None, cert)
    if x_max is None:
        cert.update(verdict=None, reason="lambda_1 at z is not certified below 1")
        return KPResult(None, cert)

    if polys is None:
        polys = exact_partial_polys(L, min_counts)
    if circuits_only:
        fractions = np.linspace(0.0, 0.98, candidates)
    else:
        fractions = [0.0]
    best = None
    for f in fractions:
        y = (z[0] + f * (x_max - z[0]), z[1])
        try:
            b = anchored_sat_bound(g, z, L, max_blocks, min_counts=min_counts, scale_point=y, polys=polys)
        except HypothesisError:
            continue
        if b.converged and (best is None or b.total < best.total):
            best = b
    if best is None:
        cert.update(verdict=None, reason="no contracting block found")
        return KPResult(None, cert)
    verdict = best.total <= inst.kpT
    cert.update(
        scale_point=best.scale_point,
        exact_partial=best.exact_partial,
        tail_bound=best.tail_bound,
        total=best.total,
        q0=best.q0,
        rho=best.rho,
        verdict=verdict,
    )
    return KPResult(verdict, cert)


def _poly_value(coeffs: Sequence[float], x: float) -> float:
    return math.fsum(c * x**i for i, c in enumerate(coeffs))


@dataclass
class Epsilon0Result:
    epsilon0: float
    checked: list[tuple[float, bool | None]]
    certificate: dict

    def as_dict(self) -> dict:
        return asdict(self)


def find_epsilon0(
    f_coeffs: Sequence[float],
    kpT: float,
    g: GMatrix,
    L: int = 8,
    *,
    eps_max: float = 1.0,
    iterations: int = 30,
) -> Epsilon0Result:
    """Bisect for the largest epsilon with the criterion certified at +-epsilon.

    Only the listed epsilon values are certified; no monotonicity of the
    bound in epsilon is assumed.
    """
    f0 = _poly_value(f_coeffs, 0.0)
    if not abs(f0) < 1.0:
        raise HypothesisError(f"|f(0)| = {abs(f0)} must be below 1")
    if not abs(f0) * math.exp(kpT) < 1.0:
        raise HypothesisError(f"|f(0)| e^kpT = {abs(f0) * math.exp(kpT)} must be below 1")
    polys = exact_partial_polys(L, CIRCUIT_MIN_COUNTS)
    checked: list[tuple[float, bool | None]] = []
    certs: dict[float, dict] = {}

    def ok(eps: float) -> bool:
        verdicts = []
        for e in (eps, -eps):
            res = kp_check(KPInstance(e, _poly_value(f_coeffs, e), kpT), g, L, polys=polys)
            verdicts.append(res.verdict)
            certs.setdefault(eps, res.certificate)
            if not res.verdict:
                certs[eps] = res.certificate
                break
        verdict = all(v is True for v in verdicts)
        checked.append((eps, verdict if verdict else (False if False in verdicts else None)))
        return verdict

    best = None
    if ok(eps_max):
        best = eps_max
    else:
        lo, hi = 0.0, eps_max
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = best = mid
            else:
                hi = mid
    if best is None:
        raise SawboundError("no positive epsilon could be certified")
    return Epsilon0Result(best, checked, certs[best])


def format_certificate(cert: dict) -> str:
    keys = ["epsilon", "alpha", "kpT", "z", "L", "circuits_only", "scale_point",
            "exact_partial", "tail_bound", "total", "q0", "rho", "verdict", "reason"]
    lines = []
    for k in keys:
        if k in cert:
            v = cert[k]
            if isinstance(v, tuple):
                v = " ".join(repr(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def save_certificate(cert: dict, path: str | Path) -> None:
    Path(path).write_text(format_certificate(cert))
