"""Contraction of edges and arcs, the coboundary, and the shuffle product."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .diagrams import (
    EVEN, INTERNAL, MIXED, Diagram, DiagramError, DiagramSum,
)


@dataclass(frozen=True)
class Contractible:
    """An internal/mixed edge (by index) or an arc (pair of consecutive externals)."""

    edge: int | None = None
    arc: tuple[int, int] | None = None

    def __post_init__(self):
        if (self.edge is None) == (self.arc is None):
            raise ValueError("exactly one of edge/arc must be given")


def targets(d: Diagram) -> list[Contractible]:
    out = [Contractible(edge=k) for k, e in enumerate(d.edges)
           if d.edge_kind(e) in (INTERNAL, MIXED)]
    out.extend(Contractible(arc=a) for a in d.arcs())
    return out


def _endpoints(d: Diagram, t: Contractible) -> tuple[int, int]:
    if t.edge is not None:
        if not 0 <= t.edge < len(d.edges):
            raise DiagramError(f"no edge {t.edge}")
        e = d.edges[t.edge]
        kind = d.edge_kind(e)
        if kind not in (INTERNAL, MIXED):
            raise DiagramError(f"cannot contract a {kind}")
        return e
    i, j = t.arc
    if not (d.is_external(i) and d.is_external(j) and j == i + 1
            and d.segment_of(i) == d.segment_of(j)):
        raise DiagramError(f"({i},{j}) is not an arc between labeled external vertices")
    return i, j


def contract(d: Diagram, t: Contractible) -> Diagram:
    """Contract ``t``.

    The surviving vertex keeps the higher endpoint label and labels above the
    removed one drop by one; a vertex that lands on a segment takes the
    linear position of the external endpoint.  Internal vertices keep their
    relative order, so no relabeling sign arises.  Edge labels above the
    contracted edge drop by one, which keeps edge order.
    """
    i, j = _endpoints(d, t)
    lo, hi = min(i, j), max(i, j)

    def merged_label(v):
        if v == lo:
            v = hi
        return v - 1 if v > lo else v

    ext_i, ext_j = d.is_external(i), d.is_external(j)
    anchor = lo if d.is_external(lo) else (hi if d.is_external(hi) else None)

    ext_keys, int_keys = {}, {}
    for v in range(1, d.n_vertices + 1):
        if v == lo:
            continue
        if v == hi:
            if anchor is not None:
                ext_keys[v] = anchor
            else:
                int_keys[v] = merged_label(v)
        elif d.is_external(v):
            ext_keys[v] = v
        else:
            int_keys[v] = merged_label(v)
    ordered = sorted(ext_keys, key=ext_keys.get) + sorted(int_keys, key=int_keys.get)
    std = {v: k for k, v in enumerate(ordered, start=1)}
    std[lo] = std[hi]

    new_ext = list(d.ext)
    if ext_i and ext_j:
        new_ext[d.segment_of(lo) - 1] -= 1
    new_int = d.n_int - (0 if (ext_i and ext_j) else 1)
    edges = [(std[a], std[b]) for k, (a, b) in enumerate(d.edges) if k != t.edge]
    return Diagram(d.m, d.parity, d.flavor, tuple(new_ext), new_int, tuple(edges))


def epsilon(d: Diagram, t: Contractible) -> int:
    """Sign attached to contracting ``t`` in the coboundary."""
    i, j = _endpoints(d, t)
    if d.parity == EVEN and t.edge is not None:
        return (-1) ** (t.edge + 1 + d.n_ext + 1)
    if i == j:
        raise DiagramError("malformed contraction target")
    return (-1) ** j if j > i else (-1) ** (i + 1)


def loop_orientation(d: Diagram, t: Contractible) -> int:
    """Orientation sign of a loop created by contracting ``t``.

    A loop has no visible direction, so for odd parity it inherits one from
    the chord it came from: +1 when that chord runs from the lower to the
    higher label, -1 otherwise.  This keeps delta compatible with reversing
    edge orientations.
    """
    if t.arc is None or d.parity == EVEN:
        return 1
    i, j = t.arc
    for a, b in d.edges:
        if (a, b) == (j, i):
            return -1
    return 1


def delta(d: Diagram) -> DiagramSum:
    """Coboundary: signed sum of all edge and arc contractions."""
    return _delta_cached(d)


@lru_cache(maxsize=None)
def _delta_cached(d: Diagram) -> DiagramSum:
    out = DiagramSum()
    for t in targets(d):
        out.add(contract(d, t), epsilon(d, t) * loop_orientation(d, t))
    return out


def delta_sum(s: DiagramSum) -> DiagramSum:
    out = DiagramSum()
    for d, c in s.terms.items():
        for dd, cc in delta(d).terms.items():
            out.add(dd, c * cc, canonical=True)
    return out


# ---------------------------------------------------------------------------
# shuffle product

def _interleavings(p: int, q: int):
    """Yield tuples of 0/1 flags: 0 = next vertex from the first factor."""
    for pos in itertools.combinations(range(p + q), q):
        flags = [0] * (p + q)
        for k in pos:
            flags[k] = 1
        yield tuple(flags)


def shuffle(d1: Diagram, d2: Diagram) -> DiagramSum:
    """Shuffle product: interleave the external vertices segment by segment.

    Internal vertices of ``d2`` follow those of ``d1`` and even-parity edge
    labels of ``d2`` follow those of ``d1``.  Only internal order is signed,
    as in the contraction rule, so each interleaving enters with +1 before
    canonicalization.
    """
    if (d1.m, d1.parity, d1.flavor) != (d2.m, d2.parity, d2.flavor):
        raise DiagramError("shuffle needs matching m, parity and flavor")
    m = d1.m
    out = DiagramSum()
    per_segment = [list(_interleavings(d1.ext[s], d2.ext[s])) for s in range(m)]
    for choice in itertools.product(*per_segment):
        pos1, pos2 = {}, {}
        k = 0
        for s in range(m):
            a = iter(d1.segment_vertices(s + 1))
            b = iter(d2.segment_vertices(s + 1))
            for flag in choice[s]:
                k += 1
                if flag == 0:
                    v = next(a)
                    pos1[v] = k
                else:
                    v = next(b)
                    pos2[v] = k
        for v in d1.internal_vertices:
            k += 1
            pos1[v] = k
        for v in d2.internal_vertices:
            k += 1
            pos2[v] = k
        ext = tuple(d1.ext[s] + d2.ext[s] for s in range(m))
        edges = [(pos1[a], pos1[b]) for a, b in d1.edges] + [(pos2[a], pos2[b]) for a, b in d2.edges]
        out.add(Diagram(m, d1.parity, d1.flavor, ext, d1.n_int + d2.n_int, tuple(edges)))
    return out


def shuffle_sums(s1: DiagramSum, s2: DiagramSum) -> DiagramSum:
    out = DiagramSum()
    for d1, c1 in s1.terms.items():
        for d2, c2 in s2.terms.items():
            for d, c in shuffle(d1, d2).terms.items():
                out.add(d, c1 * c2 * c, canonical=True)
    return out
