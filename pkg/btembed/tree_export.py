"""Ball in the tree of o_F-lattice classes in F^2, written out as Graphviz DOT.

Vertices are homothety classes [L], stored by the representative with L inside
L_0 = o_F^2 and L not inside pi L_0. The neighbours of [L] are the classes of the
lattices strictly between pi L and L, one per line of L / pi L over the residue
field. Vertices are marked when L^sharp is a pi-power multiple of L (self-dual
classes), when L is stable under o_E (the fixed chamber of E^x is spanned by
these), and when some Lambda(r) of a given lattice function lies in [L].
"""

import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

from btembed import linalg
from btembed.centralizer_embed import BetaDecomposition
from btembed.dvr_lattice import DvrLattice, vp
from btembed.endo_filt import QMatrix, regular_matrix
from btembed.errors import ParameterOutOfRange, UnsupportedDimension
from btembed.field_tower import FieldElement, FieldLayer
from btembed.herm_forms import EpsilonHermitianForm, dual_lattice
from btembed.latt_fun import LatticeFunction

logger = logging.getLogger(__name__)

Vector = tuple[FieldElement, ...]

MAX_DEPTH = 6


@dataclass(frozen=True)
class TreeVertex:
    index: int
    depth: int
    basis: tuple[Vector, Vector]
    self_dual: bool
    stable: bool


@dataclass(frozen=True)
class TreeBall:
    vertices: tuple[TreeVertex, ...]
    edges: tuple[tuple[int, int], ...]
    image: frozenset[int]

    def chamber_edges(self) -> list[tuple[int, int]]:
        """Edges with both ends o_E-stable."""
        return [
            (a, b) for a, b in self.edges if self.vertices[a].stable and self.vertices[b].stable
        ]

    def to_dot(self, name: str) -> str:
        chamber = set(self.chamber_edges())
        lines = [f'graph "{name}" {{', "  node [shape=circle];"]
        for v in self.vertices:
            attrs = [f'label="v{v.index}"']
            if v.self_dual:
                attrs.append("shape=doublecircle")
            if v.stable:
                attrs.extend(("style=filled", "fillcolor=lightblue"))
            if v.index in self.image:
                attrs.extend(("color=red", "penwidth=2"))
            basis = "; ".join(" ".join(str(x) for x in b) for b in v.basis)
            attrs.append(f'tooltip="depth {v.depth}: {basis}"')
            lines.append(f"  v{v.index} [{', '.join(attrs)}];")
        for a, b in self.edges:
            style = " [penwidth=3]" if (a, b) in chamber else ""
            lines.append(f"  v{a} -- v{b}{style};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _pi_matrix(layer: FieldLayer, x: FieldElement) -> QMatrix:
    scalar = linalg.mat_scale(linalg.identity(2, layer.element(1)), x)
    return regular_matrix(layer, scalar)


class _Classes:
    """Normalisation of lattices in F^2 to class representatives."""

    def __init__(self, layer: FieldLayer) -> None:
        self.layer = layer
        self.dim = 2 * layer.degree
        self.pi = layer.uniformizer
        self.pi_mat = _pi_matrix(layer, self.pi)
        self.pi_inv_mat = _pi_matrix(layer, 1 / self.pi)
        one, zero = layer.element(1), layer.element(0)
        self.top = self.lattice(((one, zero), (zero, one)))
        self.bottom = self.top.image(self.pi_mat)

    def lattice(self, basis: Sequence[Sequence[FieldElement]]) -> DvrLattice:
        return DvrLattice.from_generators(
            self.layer.p,
            self.dim,
            (
                self.layer.flatten(linalg.vec_scale(list(b), omega))
                for b in basis
                for omega in self.layer.power_basis
            ),
        )

    def normalize(self, lattice: DvrLattice) -> DvrLattice:
        while not self.top.contains_lattice(lattice):
            lattice = lattice.image(self.pi_mat)
        while self.bottom.contains_lattice(lattice):
            lattice = lattice.image(self.pi_inv_mat)
        return lattice

    def volume(self, lattice: DvrLattice) -> Fraction:
        """v_p of the covolume; the canonical basis is triangular with power-of-p pivots."""
        total = Fraction(0)
        for b in lattice.basis:
            pivot = next(x for x in b if x)
            total += Fraction(vp(pivot, self.layer.p))
        return total

    def pi_power(self, lattice: DvrLattice, k: int) -> DvrLattice:
        mat = self.pi_mat if k > 0 else self.pi_inv_mat
        for _ in range(abs(k)):
            lattice = lattice.image(mat)
        return lattice

    def is_self_dual_class(self, lattice: DvrLattice, form: EpsilonHermitianForm) -> bool:
        """Whether L^sharp = pi^k L for some k."""
        dual = dual_lattice(lattice, form)
        k = (self.volume(dual) - self.volume(lattice)) * self.layer.ramification_index / self.dim
        if k.denominator != 1:
            return False
        return self.pi_power(lattice, int(k)) == dual

    def residue_representatives(self) -> list[FieldElement]:
        p = self.layer.p
        if self.layer.residue_field_size == p:
            return [self.layer.element(a) for a in range(p)]
        return [self.layer.element(a, c) for a in range(p) for c in range(p)]

    def neighbours(self, basis: tuple[Vector, Vector]) -> list[tuple[Vector, Vector]]:
        b1, b2 = (list(b) for b in basis)
        pb1 = tuple(linalg.vec_scale(b1, self.pi))
        pb2 = tuple(linalg.vec_scale(b2, self.pi))
        out: list[tuple[Vector, Vector]] = [(pb1, tuple(b2))]
        for t in self.residue_representatives():
            out.append((tuple(linalg.vec_add(b1, linalg.vec_scale(b2, t))), pb2))
        return out


def _is_stable(lattice: DvrLattice, mats: Sequence[QMatrix]) -> bool:
    return all(lattice.contains_lattice(lattice.image(m)) for m in mats)


def build_tree_ball(
    decomp: BetaDecomposition,
    depth: int,
    image: LatticeFunction | None = None,
) -> TreeBall:
    """The ball of radius `depth` around [o_F^2], marked for the form and beta of decomp."""
    if decomp.n != 2:
        raise UnsupportedDimension(f"The tree is drawn for n = 2, got n = {decomp.n}")
    if not 0 <= depth <= MAX_DEPTH:
        raise ParameterOutOfRange(f"Depth must lie in [0, {MAX_DEPTH}], got {depth}")
    layer = decomp.layer
    classes = _Classes(layer)
    operators = [regular_matrix(layer, b.idempotent) for b in decomp.blocks]
    operators += [
        regular_matrix(layer, b.structure) for b in decomp.blocks if b.structure is not None
    ]

    one, zero = layer.element(1), layer.element(0)
    root: tuple[Vector, Vector] = ((one, zero), (zero, one))
    keys: dict[DvrLattice, int] = {}
    vertices: list[TreeVertex] = []
    edges: set[tuple[int, int]] = set()

    def add(basis: tuple[Vector, Vector], d: int) -> tuple[int, bool]:
        key = classes.normalize(classes.lattice(basis))
        if key in keys:
            return keys[key], False
        index = len(vertices)
        keys[key] = index
        self_dual = decomp.form is not None and classes.is_self_dual_class(key, decomp.form)
        vertices.append(TreeVertex(index, d, basis, self_dual, _is_stable(key, operators)))
        return index, True

    add(root, 0)
    queue = deque([(0, root)])
    while queue:
        index, basis = queue.popleft()
        d = vertices[index].depth
        if d == depth:
            continue
        for nb in classes.neighbours(basis):
            other, fresh = add(nb, d + 1)
            edges.add((min(index, other), max(index, other)))
            if fresh:
                queue.append((other, nb))

    marked: set[int] = set()
    if image is not None:
        for r in image.jumps:
            key = classes.normalize(image.eval(r))
            if key in keys:
                marked.add(keys[key])
    logger.info(
        f"Tree ball of depth {depth}: {len(vertices)} vertices, {len(edges)} edges, "
        f"{sum(v.stable for v in vertices)} o_E-stable",
    )
    return TreeBall(tuple(vertices), tuple(sorted(edges)), frozenset(marked))
