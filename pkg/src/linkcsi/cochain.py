"""Differential matrices over graded bases and exact cohomology dimensions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from .diagrams import DEFAULT_MAX_VERTICES, Diagram, enumerate_basis
from .differential import delta


class RationalMatrix:
    """Sparse matrix with rational entries; zeros are never stored."""

    def __init__(self, rows: int, cols: int, entries=None):
        self.rows = rows
        self.cols = cols
        self.entries: dict[tuple[int, int], Fraction] = {}
        for (i, j), v in (entries or {}).items():
            self[i, j] = v

    def __getitem__(self, key) -> Fraction:
        return self.entries.get(key, Fraction(0))

    def __setitem__(self, key, value) -> None:
        i, j = key
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(key)
        value = Fraction(value)
        if value:
            self.entries[key] = value
        else:
            self.entries.pop(key, None)

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        by_row: dict[int, list[tuple[int, Fraction]]] = {}
        for (k, j), v in other.entries.items():
            by_row.setdefault(k, []).append((j, v))
        out: dict[tuple[int, int], Fraction] = {}
        for (i, k), a in self.entries.items():
            for j, b in by_row.get(k, ()):
                out[i, j] = out.get((i, j), Fraction(0)) + a * b
        return RationalMatrix(self.rows, other.cols, out)

    def is_zero(self) -> bool:
        return not self.entries

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(self.cols, self.rows, {(j, i): v for (i, j), v in self.entries.items()})

    def to_rows(self) -> list[dict[int, Fraction]]:
        rows: list[dict[int, Fraction]] = [dict() for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            rows[i][j] = v
        return rows

    def rank(self) -> int:
        return len(_echelon(self.to_rows())[1])

    def nullspace(self) -> list[dict[int, Fraction]]:
        """Basis of {x : A x = 0} from the reduced row echelon form.

        Each vector has a 1 in its free column and is returned sparse.
        """
        rows, pivots = _echelon(self.to_rows(), reduced=True)
        pivot_cols = set(pivots)
        basis = []
        for free in range(self.cols):
            if free in pivot_cols:
                continue
            vec = {free: Fraction(1)}
            for r, p in zip(rows, pivots):
                c = r.get(free)
                if c:
                    vec[p] = -c / r[p]
            basis.append(vec)
        return basis

    def __repr__(self) -> str:
        return f"RationalMatrix({self.rows}x{self.cols}, nnz={len(self.entries)})"


def _normalize(row: dict[int, int]) -> dict[int, int]:
    g = 0
    for v in row.values():
        g = gcd(g, v)
    if g > 1:
        row = {k: v // g for k, v in row.items()}
    return row


def _echelon(rows: list[dict[int, Fraction]], reduced: bool = False):
    """Fraction-free elimination on integer-scaled rows.

    Returns the nonzero echelon rows (integer entries) and their pivot columns.
    """
    work = []
    for r in rows:
        if not r:
            continue
        den = 1
        for v in r.values():
            den = den * v.denominator // gcd(den, v.denominator)
        work.append(_normalize({k: int(v * den) for k, v in r.items()}))
    done: list[dict[int, int]] = []
    pivots: list[int] = []
    by_pivot: dict[int, int] = {}
    for row in work:
        row = dict(row)
        while row:
            p = min(row)
            if p not in by_pivot:
                break
            other = done[by_pivot[p]]
            a, b = row[p], other[p]
            g = gcd(a, b)
            fa, fb = b // g, a // g
            new = {k: v * fa for k, v in row.items()}
            for k, v in other.items():
                x = new.get(k, 0) - v * fb
                if x:
                    new[k] = x
                else:
                    new.pop(k, None)
            row = _normalize(new)
        if row:
            by_pivot[min(row)] = len(done)
            pivots.append(min(row))
            done.append(row)
    order = sorted(range(len(done)), key=lambda i: pivots[i])
    done = [done[i] for i in order]
    pivots = [pivots[i] for i in order]
    if reduced:
        for i in range(len(done) - 1, -1, -1):
            p = pivots[i]
            for j in range(i):
                c = done[j].get(p)
                if not c:
                    continue
                a, b = done[i][p], c
                g = gcd(a, b)
                fa, fb = a // g, b // g
                new = {k: v * fa for k, v in done[j].items()}
                for k, v in done[i].items():
                    x = new.get(k, 0) - v * fb
                    if x:
                        new[k] = x
                    else:
                        new.pop(k, None)
                done[j] = _normalize(new)
    return [{k: Fraction(v) for k, v in r.items()} for r in done], pivots


def rank(matrix: RationalMatrix) -> int:
    return matrix.rank()


class BasisMismatchError(RuntimeError):
    pass


def delta_matrix(basis_d: list[Diagram], basis_d_plus_1: list[Diagram]) -> RationalMatrix:
    """Column j holds delta(basis_d[j]) in the target basis."""
    index = {d: i for i, d in enumerate(basis_d_plus_1)}
    mat = RationalMatrix(len(basis_d_plus_1), len(basis_d))
    for j, d in enumerate(basis_d):
        for dd, c in delta(d).terms.items():
            if dd not in index:
                raise BasisMismatchError(f"contraction image of basis element {j} is outside the target basis")
            mat[index[dd], j] = c
    return mat


@dataclass(frozen=True)
class CohomologyReport:
    m: int
    parity: str
    flavor: str
    order: int
    degree: int
    dim_space: int
    rank_in: int
    rank_out: int
    dim_cohomology: int

    def as_row(self) -> str:
        return "\t".join(str(x) for x in (
            self.m, self.parity, self.flavor, self.order, self.degree,
            self.dim_space, self.rank_in, self.rank_out, self.dim_cohomology))

    HEADER = "m\tparity\tflavor\torder\tdegree\tdim_space\trank_in\trank_out\tdim_H"


@lru_cache(maxsize=None)
def basis(m: int, parity: str, flavor: str, order: int, degree: int,
          max_vertices: int = DEFAULT_MAX_VERTICES) -> tuple[Diagram, ...]:
    if degree < 0:
        return ()
    return tuple(enumerate_basis(m, parity, flavor, order, degree, max_vertices))


def _basis_or_empty(m, parity, flavor, order, degree, max_vertices):
    # bases beyond the vertex count 2*order are empty; no cap check needed there
    if degree < 0 or 2 * order - degree < 1:
        return ()
    return basis(m, parity, flavor, order, degree, max_vertices)


def cohomology(m: int, parity: str, flavor: str, order: int, degree: int,
               max_vertices: int = DEFAULT_MAX_VERTICES) -> CohomologyReport:
    b_prev = _basis_or_empty(m, parity, flavor, order, degree - 1, max_vertices)
    b_here = _basis_or_empty(m, parity, flavor, order, degree, max_vertices)
    b_next = _basis_or_empty(m, parity, flavor, order, degree + 1, max_vertices)
    rank_in = delta_matrix(list(b_prev), list(b_here)).rank() if b_prev and b_here else 0
    rank_out = delta_matrix(list(b_here), list(b_next)).rank() if b_here and b_next else 0
    dim = len(b_here) - rank_in - rank_out
    return CohomologyReport(m, parity, flavor, order, degree, len(b_here), rank_in, rank_out, dim)
