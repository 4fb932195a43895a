"""Lattice families with tunable amplitude mutual information.

Checkerboard: disjoint five-site Z crosses on an L x L torus. Qubit (i, j)
(column i, row j) sits at index ``L*j + i``.

Toric code: plaquette Z checks on the 2L^2 edges of an L x L torus, with i the
horizontal (fast) coordinate. Scanning vertices v = L*(j-1) + i, the horizontal
edge (i,j)-(i+1,j) gets label 2v-1 and the vertical edge (i,j)-(i,j+1) gets 2v.
Column ``label - 1`` holds the edge; the first L^2 labels form side A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from . import gf2
from .gf2 import GF2Matrix
from .stabilizer import Bipartition, CmiResult, StabilizerTableau, ZCheckSystem, cmi_rank_formula

Cut = Literal["vertical", "horizontal"]


def cross(center: tuple[int, int], l: int) -> list[tuple[int, int]]:
    i, j = center
    return [(i, j), ((i + 1) % l, j), ((i - 1) % l, j), (i, (j + 1) % l), (i, (j - 1) % l)]


def _axis_positions(l: int, spacing: float) -> list[int]:
    # anchored at the middle so the cut always sees the same local pattern;
    # centers stay inside [1, l-2] so no cross wraps around the torus
    mid = l // 2
    pos = {mid}
    k = 1
    while True:
        step = int(round(k * spacing))
        lo, hi = mid - step, mid + step
        fresh = False
        if lo >= 1:
            pos.add(lo)
            fresh = True
        if hi <= l - 2:
            pos.add(hi)
            fresh = True
        if not fresh:
            break
        k += 1
    return sorted(pos)


def _lee_packing(l: int) -> list[tuple[int, int]]:
    taken: set[tuple[int, int]] = set()
    centers = []
    for j in range(l):
        for i in range(l):
            if (i + 2 * j) % 5:
                continue
            sites = cross((i, j), l)
            if len(set(sites)) < 5 or taken.intersection(sites):
                continue
            taken.update(sites)
            centers.append((i, j))
    return centers


@dataclass(frozen=True)
class CheckerboardFamily:
    l: int
    gamma: float
    centers: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return self.l * self.l

    def index(self, i: int, j: int) -> int:
        return self.l * j + i

    def supports(self) -> list[list[int]]:
        return [[self.index(i, j) for i, j in cross(c, self.l)] for c in self.centers]

    def disjoint(self) -> bool:
        seen: set[int] = set()
        for sup in self.supports():
            if len(set(sup)) != 5 or seen.intersection(sup):
                return False
            seen.update(sup)
        return True


def build_checkerboard(l: int, gamma: float) -> CheckerboardFamily:
    """Roughly ``L**(2*gamma)`` non-overlapping crosses.

    Center spacing is ``max(3, L**(1-gamma))`` along each axis. When the block
    size rounds to 1 the dense i + 2j = 0 (mod 5) packing is used instead.
    """
    if l < 3:
        raise ValueError("checkerboard needs l >= 3")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    block = l ** (1.0 - gamma)
    if max(1, round(block)) == 1:
        centers = _lee_packing(l)
    else:
        axis = _axis_positions(l, max(3.0, block))
        centers = [(i, j) for j in axis for i in axis]
    fam = CheckerboardFamily(l, float(gamma), tuple(centers))
    if not fam.disjoint():
        raise RuntimeError(f"overlapping crosses for l={l}, gamma={gamma}")
    return fam


def checkerboard_zsystem(f: CheckerboardFamily) -> ZCheckSystem:
    dense = np.zeros((len(f.centers), f.n), dtype=np.uint8)
    for r, sup in enumerate(f.supports()):
        dense[r, sup] = 1
    return ZCheckSystem(GF2Matrix.from_dense(dense))


def grid_cut(l: int, cut: Cut = "vertical") -> Bipartition:
    half = l // 2
    if cut == "vertical":
        a = [l * j + i for j in range(l) for i in range(half)]
    elif cut == "horizontal":
        a = list(range(l * half))
    else:
        raise ValueError(f"unknown cut {cut!r}")
    return Bipartition.from_side(l * l, a)


def crossing_checks(f: CheckerboardFamily, cut: Bipartition) -> int:
    side_a = set(cut.a)
    return sum(1 for sup in f.supports() if 0 < len(side_a.intersection(sup)) < len(sup))


def checkerboard_cmi_curve(gamma: float, l_list: Sequence[int], cut: Cut = "vertical") -> list[tuple[int, CmiResult]]:
    out = []
    for l in l_list:
        fam = build_checkerboard(l, gamma)
        out.append((l, cmi_rank_formula(checkerboard_zsystem(fam).m, grid_cut(l, cut))))
    return out


def single_check_system(l: int) -> tuple[ZCheckSystem, Bipartition]:
    """One two-site check straddling the middle cut of an l x l grid: CMI 1 for every l."""
    n = l * l
    row = np.zeros((1, n), dtype=np.uint8)
    half = l // 2
    row[0, [half - 1, half]] = 1
    return ZCheckSystem(GF2Matrix.from_dense(row)), grid_cut(l, "vertical")


# ---------------------------------------------------------------- toric code


def horizontal_edge(i: int, j: int, l: int) -> int:
    """Column of the edge (i,j)-(i+1,j); 1-based coordinates taken mod l."""
    i, j = (i - 1) % l + 1, (j - 1) % l + 1
    return 2 * (l * (j - 1) + i) - 2


def vertical_edge(i: int, j: int, l: int) -> int:
    """Column of the edge (i,j)-(i,j+1)."""
    i, j = (i - 1) % l + 1, (j - 1) % l + 1
    return 2 * (l * (j - 1) + i) - 1


@dataclass(frozen=True)
class ToricLattice:
    l: int
    plaquettes: GF2Matrix  # l^2 x 2 l^2

    @property
    def n_edges(self) -> int:
        return 2 * self.l * self.l

    def cut(self) -> Bipartition:
        half = self.l * self.l
        return Bipartition(tuple(range(half)), tuple(range(half, self.n_edges)))

    def zsystem(self) -> ZCheckSystem:
        return ZCheckSystem(self.plaquettes)

    def vertex_rows(self) -> np.ndarray:
        l = self.l
        d = np.zeros((l * l, self.n_edges), dtype=np.uint8)
        for j in range(1, l + 1):
            for i in range(1, l + 1):
                r = l * (j - 1) + i - 1
                d[r, [horizontal_edge(i, j, l), horizontal_edge(i - 1, j, l),
                      vertical_edge(i, j, l), vertical_edge(i, j - 1, l)]] = 1
        return d

    def tableau(self) -> StabilizerTableau:
        """Vertex X checks, plaquette Z checks and two non-contractible X loops."""
        l = self.l
        vx = self.vertex_rows()
        loops = np.zeros((2, self.n_edges), dtype=np.uint8)
        loops[0, [vertical_edge(i, 1, l) for i in range(1, l + 1)]] = 1
        loops[1, [horizontal_edge(1, j, l) for j in range(1, l + 1)]] = 1
        pz = self.plaquettes.to_dense()
        x = np.vstack([vx, np.zeros_like(pz), loops])
        z = np.vstack([np.zeros_like(vx), pz, np.zeros_like(loops)])
        return StabilizerTableau(self.n_edges, GF2Matrix.from_dense(x), GF2Matrix.from_dense(z))


def build_toric(l: int) -> ToricLattice:
    if l < 2:
        raise ValueError("toric lattice needs l >= 2")
    d = np.zeros((l * l, 2 * l * l), dtype=np.uint8)
    for j in range(1, l + 1):
        for i in range(1, l + 1):
            r = l * (j - 1) + i - 1
            d[r, [horizontal_edge(i, j, l), horizontal_edge(i, j + 1, l),
                  vertical_edge(i, j, l), vertical_edge(i + 1, j, l)]] = 1
    return ToricLattice(l, GF2Matrix.from_dense(d))


def toric_cmi(l: int) -> CmiResult:
    lat = build_toric(l)
    return cmi_rank_formula(lat.plaquettes, lat.cut())


def toric_column_cut(l: int) -> Bipartition:
    """Edges hanging off vertices with i <= l // 2 versus the rest (the label cut rotated by 90 degrees)."""
    a = [col for j in range(1, l + 1) for i in range(1, l // 2 + 1)
         for col in (horizontal_edge(i, j, l), vertical_edge(i, j, l))]
    return Bipartition.from_side(2 * l * l, a)


def loglog_slope(sizes: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """OLS slope of log(value) against log(size) and its standard error."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 3:
        raise ValueError("need at least three sizes for a slope")
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    resid = y - y.mean() - slope * xc
    se = math.sqrt(float(resid @ resid) / (x.size - 2) / float(xc @ xc))
    return slope, se
