"""Periodic lattices with weighted edge classes.

A lattice is described combinatorially: a finite set of vertex-class
representatives, the outgoing step rules of each class, a basis of the
translation group and a list of weight-preserving symmetries given as
coset representatives modulo translations.  Vertices are integer
coordinate vectors in a (possibly tilted) embedding.
"""

from __future__ import annotations

import dataclasses
import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .exceptions import LatticeError

if TYPE_CHECKING:
    from .walks import Walk

Vec = tuple[int, ...]


@dataclass(frozen=True)
class StepRule:
    offset: Vec
    edge_class: int


@dataclass(frozen=True)
class VertexClassSpec:
    representative: Vec
    steps: tuple[StepRule, ...]


@dataclass(frozen=True)
class SymmetryRep:
    """Affine map ``v -> linear @ v + shift`` on lattice coordinates."""

    linear: tuple[Vec, ...]
    shift: Vec

    def map_offset(self, offset: Sequence[int]) -> Vec:
        return tuple(sum(a * b for a, b in zip(row, offset)) for row in self.linear)

    def __call__(self, v: Sequence[int]) -> Vec:
        return tuple(x + s for x, s in zip(self.map_offset(v), self.shift))

    def compose(self, other: "SymmetryRep") -> "SymmetryRep":
        """Return ``self o other``."""
        lin = tuple(
            tuple(sum(self.linear[i][k] * other.linear[k][j] for k in range(len(other.linear)))
                  for j in range(len(other.linear)))
            for i in range(len(self.linear))
        )
        shift = tuple(a + b for a, b in zip(self.map_offset(other.shift), self.shift))
        return SymmetryRep(lin, shift)

    @classmethod
    def identity(cls, dim: int) -> "SymmetryRep":
        return cls(tuple(tuple(int(i == j) for j in range(dim)) for i in range(dim)), (0,) * dim)


@dataclass(frozen=True)
class LatticeSpec:
    name: str
    scheme: str
    dim: int
    edge_class_labels: tuple[str, ...]
    vertex_classes: tuple[VertexClassSpec, ...]
    translation_basis: tuple[Vec, ...]
    symmetries: tuple[SymmetryRep, ...] = field(default=())

    @property
    def n_vertex_classes(self) -> int:
        return len(self.vertex_classes)

    @property
    def n_edge_classes(self) -> int:
        return len(self.edge_class_labels)

    @property
    def representatives(self) -> tuple[Vec, ...]:
        return tuple(vc.representative for vc in self.vertex_classes)

    @cached_property
    def _basis_inverse(self) -> np.ndarray | None:
        basis = np.array(self.translation_basis, dtype=float).reshape(self.dim, self.dim)
        if round(np.linalg.det(basis)) == 0:
            return None
        return np.linalg.inv(basis)

    def translation_coefficients(self, delta: Sequence[int]) -> Vec | None:
        """Integer coefficients of ``delta`` in the translation basis, or None."""
        inv = self._basis_inverse
        if inv is None:
            return None
        coeffs = np.rint(np.asarray(delta, dtype=float) @ inv).astype(np.int64)
        recon = [sum(int(c) * b[i] for c, b in zip(coeffs, self.translation_basis))
                 for i in range(self.dim)]
        if tuple(recon) != tuple(delta):
            return None
        return tuple(int(c) for c in coeffs)

    @cached_property
    def step_targets(self) -> tuple[tuple[int, ...], ...]:
        """``step_targets[k][j]``: vertex class reached by step rule j of class k."""
        table = []
        for vc in self.vertex_classes:
            row = []
            for rule in vc.steps:
                target = tuple(a + b for a, b in zip(vc.representative, rule.offset))
                row.append(classify_vertex(self, target))
            table.append(tuple(row))
        return tuple(table)

    @cached_property
    def _step_lookup(self) -> tuple[dict[Vec, int], ...]:
        return tuple({rule.offset: rule.edge_class for rule in vc.steps} for vc in self.vertex_classes)

    def edge_class_of(self, vertex_class: int, offset: Vec) -> int | None:
        return self._step_lookup[vertex_class].get(offset)

    @cached_property
    def symmetry_class_map(self) -> tuple[tuple[int, ...], ...]:
        """``symmetry_class_map[i][k]``: class of the image of representative k under symmetry i."""
        return tuple(
            tuple(classify_vertex(self, sym(rep)) for rep in self.representatives)
            for sym in self.symmetries
        )


def _lattice_vertex_class(lattice: LatticeSpec, coord: Sequence[int]) -> int | None:
    for k, rep in enumerate(lattice.representatives):
        delta = tuple(int(c) - r for c, r in zip(coord, rep))
        if lattice.translation_coefficients(delta) is not None:
            return k
    return None


def classify_vertex(lattice: LatticeSpec, coord: Sequence[int]) -> int:
    """Index of the vertex class containing ``coord``."""
    if len(coord) != lattice.dim:
        raise LatticeError(f"coordinate {tuple(coord)} has wrong dimension for {lattice.name}")
    k = _lattice_vertex_class(lattice, coord)
    if k is None:
        raise LatticeError(f"{tuple(coord)} is not a vertex of the {lattice.name} lattice")
    return k


def neighbor_steps(lattice: LatticeSpec, coord: Sequence[int]) -> list[tuple[Vec, int]]:
    k = classify_vertex(lattice, coord)
    return [
        (tuple(c + o for c, o in zip(coord, rule.offset)), rule.edge_class)
        for rule in lattice.vertex_classes[k].steps
    ]


def apply_symmetry(lattice: LatticeSpec, sym: SymmetryRep, walk: "Walk") -> "Walk":
    """Image of ``walk`` under ``sym``, translated back to a class representative.

    Raises LatticeError if the image leaves the lattice or changes the class
    of any edge.
    """
    image_start = sym(walk.start)
    k = classify_vertex(lattice, image_start)
    steps = []
    cls = k
    for offset, edge_class in walk.steps:
        new_offset = sym.map_offset(offset)
        found = lattice.edge_class_of(cls, new_offset)
        if found is None:
            raise LatticeError(f"symmetry maps step {offset} off the {lattice.name} lattice")
        if found != edge_class:
            raise LatticeError(
                f"symmetry is not weight-preserving: step {offset} of class "
                f"{lattice.edge_class_labels[edge_class]} maps to class "
                f"{lattice.edge_class_labels[found]}"
            )
        steps.append((new_offset, edge_class))
        cls = lattice.step_targets[cls][_rule_index(lattice, cls, new_offset)]
    return dataclasses.replace(
        walk, start_class=k, start=lattice.representatives[k], steps=tuple(steps)
    )


def _rule_index(lattice: LatticeSpec, cls: int, offset: Vec) -> int:
    for j, rule in enumerate(lattice.vertex_classes[cls].steps):
        if rule.offset == offset:
            return j
    raise LatticeError(f"no step {offset} from vertex class {cls}")


@dataclass
class LatticeReport:
    lattice: str
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __str__(self) -> str:
        if self.ok:
            return f"{self.lattice}: ok"
        return f"{self.lattice}: " + "; ".join(self.failures)


def check_lattice(lattice: LatticeSpec) -> LatticeReport:
    """Check the structural conditions a lattice must satisfy before use.

    Covers: finitely many vertex classes with nonempty step sets, a full-rank
    translation basis, strong connectivity of the class quotient graph, and
    for every symmetry: translation-lattice invariance, edge-class
    preservation and closure of the list under composition modulo
    translations.
    """
    report = LatticeReport(f"{lattice.name}/{lattice.scheme}")
    fail = report.failures.append
    D = lattice.dim
    if lattice.n_vertex_classes < 1:
        fail("no vertex classes")
        return report
    if len(lattice.translation_basis) != D or any(len(b) != D for b in lattice.translation_basis):
        fail("translation basis has wrong shape")
        return report
    if lattice._basis_inverse is None:
        fail("translation basis is singular (rank check)")
        return report

    for k, vc in enumerate(lattice.vertex_classes):
        if len(vc.representative) != D:
            fail(f"class {k}: representative has wrong dimension")
        if not vc.steps:
            fail(f"class {k}: no outgoing steps")
        for rule in vc.steps:
            if len(rule.offset) != D or not any(rule.offset):
                fail(f"class {k}: invalid step offset {rule.offset}")
            if not 0 <= rule.edge_class < lattice.n_edge_classes:
                fail(f"class {k}: edge class {rule.edge_class} out of range")
        for other in range(k):
            delta = tuple(a - b for a, b in zip(vc.representative, lattice.vertex_classes[other].representative))
            if lattice.translation_coefficients(delta) is not None:
                fail(f"classes {other} and {k} are translates of each other")
    if report.failures:
        return report

    try:
        targets = lattice.step_targets
    except LatticeError as exc:
        fail(f"step leaves the lattice: {exc}")
        return report

    # quotient graph: every class must reach every class
    K = lattice.n_vertex_classes
    for start in range(K):
        seen = {start}
        queue = deque([start])
        while queue:
            c = queue.popleft()
            for nxt in targets[c]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        if len(seen) != K:
            fail(f"quotient graph not strongly connected from class {start}")
            break

    for i, sym in enumerate(lattice.symmetries):
        fail_sym = _check_symmetry(lattice, sym)
        if fail_sym:
            fail(f"symmetry {i}: {fail_sym}")
    if report.failures:
        return report

    if not any(s == SymmetryRep.identity(D) for s in lattice.symmetries):
        fail("symmetry list lacks the identity")
    for (i, a), (j, b) in itertools.product(enumerate(lattice.symmetries), repeat=2):
        if _find_coset(lattice, a.compose(b)) is None:
            fail(f"composition of symmetries {i} and {j} is not in the list modulo translations")
    return report


def _check_symmetry(lattice: LatticeSpec, sym: SymmetryRep) -> str | None:
    D = lattice.dim
    if len(sym.linear) != D or any(len(r) != D for r in sym.linear) or len(sym.shift) != D:
        return "wrong shape"
    det = round(np.linalg.det(np.array(sym.linear, dtype=float)))
    if abs(det) != 1:
        return "linear part is not unimodular"
    for b in lattice.translation_basis:
        if lattice.translation_coefficients(sym.map_offset(b)) is None:
            return "does not preserve the translation group"
    images = set()
    for k, vc in enumerate(lattice.vertex_classes):
        img = sym(vc.representative)
        kk = _lattice_vertex_class(lattice, img)
        if kk is None:
            return f"maps representative {vc.representative} off the lattice"
        images.add(kk)
        rules = {r.offset: r.edge_class for r in lattice.vertex_classes[kk].steps}
        if len(rules) != len(vc.steps):
            return f"degree mismatch between classes {k} and {kk}"
        for rule in vc.steps:
            mapped = sym.map_offset(rule.offset)
            if mapped not in rules:
                return f"maps step {rule.offset} of class {k} off the lattice"
            if rules[mapped] != rule.edge_class:
                a = lattice.edge_class_labels[rule.edge_class]
                b = lattice.edge_class_labels[rules[mapped]]
                return f"edge-class preservation fails: {a}-edge {rule.offset} maps to {b}-edge"
    if len(images) != lattice.n_vertex_classes:
        return "does not permute the vertex classes"
    return None


def _find_coset(lattice: LatticeSpec, sym: SymmetryRep) -> int | None:
    for i, other in enumerate(lattice.symmetries):
        if other.linear != sym.linear:
            continue
        delta = tuple(a - b for a, b in zip(sym.shift, other.shift))
        if lattice.translation_coefficients(delta) is not None:
            return i
    return None


# -- builtin lattices ------------------------------------------------------

def _diag(*signs: int) -> tuple[Vec, ...]:
    n = len(signs)
    return tuple(tuple(signs[i] if i == j else 0 for j in range(n)) for i in range(n))


def _sign_maps(dim: int) -> list[SymmetryRep]:
    return [SymmetryRep(_diag(*signs), (0,) * dim)
            for signs in itertools.product((1, -1), repeat=dim)]


def _unit_steps(dim: int, classes: Sequence[int]) -> tuple[StepRule, ...]:
    steps = []
    for axis in range(dim):
        for sign in (1, -1):
            off = tuple(sign if i == axis else 0 for i in range(dim))
            steps.append(StepRule(off, classes[axis]))
    return tuple(steps)


def _square() -> LatticeSpec:
    return LatticeSpec(
        name="square", scheme="general", dim=2, edge_class_labels=("x", "y"),
        vertex_classes=(VertexClassSpec((0, 0), _unit_steps(2, (0, 1))),),
        translation_basis=((1, 0), (0, 1)),
        symmetries=tuple(_sign_maps(2)),
    )


def _cubic(scheme: str) -> LatticeSpec:
    basis = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    if scheme == "general":
        return LatticeSpec(
            name="cubic", scheme="general", dim=3, edge_class_labels=("x", "y", "z"),
            vertex_classes=(VertexClassSpec((0, 0, 0), _unit_steps(3, (0, 1, 2))),),
            translation_basis=basis, symmetries=tuple(_sign_maps(3)),
        )
    swaps = []
    for a, b, c in itertools.product((1, -1), repeat=3):
        swaps.append(SymmetryRep(((0, a, 0), (b, 0, 0), (0, 0, c)), (0, 0, 0)))
    return LatticeSpec(
        name="cubic", scheme="xy-equal", dim=3, edge_class_labels=("x", "z"),
        vertex_classes=(VertexClassSpec((0, 0, 0), _unit_steps(3, (0, 0, 1))),),
        translation_basis=basis, symmetries=tuple(_sign_maps(3) + swaps),
    )


_TRI_DIRS = ((1, 0), (0, 1), (1, 1))


def _triangular(scheme: str) -> LatticeSpec:
    classes = (0, 1, 2) if scheme == "general" else (0, 0, 1)
    labels = ("x", "y", "z") if scheme == "general" else ("x", "z")
    steps = []
    for direction, cls in zip(_TRI_DIRS, classes):
        steps.append(StepRule(direction, cls))
        steps.append(StepRule(tuple(-c for c in direction), cls))
    if scheme == "general":
        syms = (SymmetryRep.identity(2), SymmetryRep(_diag(-1, -1), (0, 0)))
    else:
        swap, neg_swap = ((0, 1), (1, 0)), ((0, -1), (-1, 0))
        syms = (SymmetryRep.identity(2), SymmetryRep(_diag(-1, -1), (0, 0)),
                SymmetryRep(swap, (0, 0)), SymmetryRep(neg_swap, (0, 0)))
    return LatticeSpec(
        name="triangular", scheme=scheme, dim=2, edge_class_labels=labels,
        vertex_classes=(VertexClassSpec((0, 0), tuple(steps)),),
        translation_basis=((1, 0), (0, 1)), symmetries=syms,
    )


def _hexagonal(scheme: str) -> LatticeSpec:
    # Each undirected edge takes the class of its direction up to sign.
    x, y, z = (0, 1, 2) if scheme == "general" else (0, 0, 1)
    labels = ("x", "y", "z") if scheme == "general" else ("x", "z")
    even = VertexClassSpec((0, 0), (StepRule((1, 0), x), StepRule((0, 1), y), StepRule((-1, -1), z)))
    odd = VertexClassSpec((1, 0), (StepRule((-1, 0), x), StepRule((0, -1), y), StepRule((1, 1), z)))
    return LatticeSpec(
        name="hexagonal", scheme=scheme, dim=2, edge_class_labels=labels,
        vertex_classes=(even, odd),
        translation_basis=((2, 1), (1, -1)),
        symmetries=(SymmetryRep.identity(2), SymmetryRep(_diag(-1, -1), (1, 0))),
    )


_BUILTINS = {
    ("square", "general"): _square,
    ("cubic", "general"): lambda: _cubic("general"),
    ("cubic", "xy-equal"): lambda: _cubic("xy-equal"),
    ("triangular", "general"): lambda: _triangular("general"),
    ("triangular", "xz"): lambda: _triangular("xz"),
    ("hexagonal", "general"): lambda: _hexagonal("general"),
    ("hexagonal", "xy-equal"): lambda: _hexagonal("xy-equal"),
}


def builtin_names() -> list[tuple[str, str]]:
    return list(_BUILTINS)


def builtin_lattice(name: str, scheme: str = "general") -> LatticeSpec:
    try:
        factory = _BUILTINS[(name, scheme)]
    except KeyError:
        known = ", ".join(f"{a}/{b}" for a, b in _BUILTINS)
        raise LatticeError(f"unknown lattice {name}/{scheme} (known: {known})") from None
    return factory()


# -- text format -----------------------------------------------------------

def _ints(text: str) -> Vec:
    try:
        return tuple(int(tok) for tok in text.split())
    except ValueError:
        raise LatticeError(f"expected integers, got {text!r}") from None


def dumps_lattice(lattice: LatticeSpec) -> str:
    lines = [
        f"name: {lattice.name}",
        f"scheme: {lattice.scheme}",
        f"D: {lattice.dim}",
        f"d: {lattice.n_edge_classes}",
        f"K: {lattice.n_vertex_classes}",
        "labels: " + " ".join(lattice.edge_class_labels),
    ]
    for b in lattice.translation_basis:
        lines.append("basis: " + " ".join(map(str, b)))
    for vc in lattice.vertex_classes:
        lines.append("class: " + " ".join(map(str, vc.representative)))
        for rule in vc.steps:
            lines.append("step: " + " ".join(map(str, rule.offset)) + f" {rule.edge_class}")
    for sym in lattice.symmetries:
        flat = [str(a) for row in sym.linear for a in row]
        lines.append("symmetry: " + " ".join(flat) + " | " + " ".join(map(str, sym.shift)))
    return "\n".join(lines) + "\n"


def loads_lattice(text: str) -> LatticeSpec:
    """Parse the line-oriented lattice format written by :func:`dumps_lattice`."""
    header: dict[str, str] = {}
    basis: list[Vec] = []
    classes: list[tuple[Vec, list[StepRule]]] = []
    syms: list[SymmetryRep] = []
    order = ["name", "scheme", "D", "d", "K", "labels"]
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise LatticeError(f"line {lineno}: expected 'key: value'")
        key, value = key.strip(), value.strip()
        if key in order:
            if len(header) >= len(order) or order[len(header)] != key:
                raise LatticeError(f"line {lineno}: field {key!r} out of order")
            header[key] = value
            continue
        if len(header) != len(order):
            raise LatticeError(f"line {lineno}: header incomplete before {key!r}")
        D = int(header["D"])
        if key == "basis":
            basis.append(_ints(value))
        elif key == "class":
            classes.append((_ints(value), []))
        elif key == "step":
            if not classes:
                raise LatticeError(f"line {lineno}: step before any class")
            vals = _ints(value)
            if len(vals) != D + 1:
                raise LatticeError(f"line {lineno}: step needs {D} offsets and an edge class")
            classes[-1][1].append(StepRule(vals[:D], vals[D]))
        elif key == "symmetry":
            lin_text, bar, shift_text = value.partition("|")
            lin = _ints(lin_text)
            if not bar or len(lin) != D * D:
                raise LatticeError(f"line {lineno}: symmetry needs {D * D} entries, '|', shift")
            syms.append(SymmetryRep(tuple(lin[i * D:(i + 1) * D] for i in range(D)), _ints(shift_text)))
        else:
            raise LatticeError(f"line {lineno}: unknown field {key!r}")
    if len(header) != len(order):
        raise LatticeError("lattice file header incomplete")
    labels = tuple(header["labels"].split())
    try:
        D, d, K = int(header["D"]), int(header["d"]), int(header["K"])
    except ValueError:
        raise LatticeError("D, d and K must be integers") from None
    if len(labels) != d:
        raise LatticeError(f"expected {d} edge class labels, got {len(labels)}")
    if len(classes) != K:
        raise LatticeError(f"expected {K} vertex classes, got {len(classes)}")
    return LatticeSpec(
        name=header["name"], scheme=header["scheme"], dim=D, edge_class_labels=labels,
        vertex_classes=tuple(VertexClassSpec(rep, tuple(steps)) for rep, steps in classes),
        translation_basis=tuple(basis), symmetries=tuple(syms),
    )


def load_lattice(path: str | Path) -> LatticeSpec:
    lattice = loads_lattice(Path(path).read_text())
    report = check_lattice(lattice)
    if not report.ok:
        raise LatticeError(f"lattice file {path} failed validation: {report}")
    return lattice


def save_lattice(lattice: LatticeSpec, path: str | Path) -> None:
    Path(path).write_text(dumps_lattice(lattice))

