"""Trivalent diagrams, STU reduction, 4T/1T relations and weight-system spaces.

The STU rule used here is read off from the coboundary: contracting the
mixed edge of a tripod leg and contracting the arc between two neighbouring
chord feet produce the same degree-1 diagram, and the cocycle condition on
that diagram is a three-term linear relation.  Extending a weight system by
this rule therefore always lands on a cocycle of the diagram complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cochain import RationalMatrix, basis
from .diagrams import (
    BRAID, LINK, MIXED, ODD, Diagram, DiagramError, DiagramSum, canonicalize,
    chord_diagrams, grading, permutation_sign,
)
from .differential import Contractible, contract, delta


def is_trivalent(d: Diagram) -> bool:
    if any(d.valence(v) != 1 for v in range(1, d.n_ext + 1)):
        return False
    if any(d.valence(v) != 3 for v in d.internal_vertices):
        return False
    return grading(d).degree == 0


def is_chord_diagram(d: Diagram) -> bool:
    return d.n_int == 0 and d.n_ext == 2 * len(d.edges) and all(
        a != b for a, b in d.edges) and all(d.valence(v) == 1 for v in range(1, d.n_ext + 1))


# ---------------------------------------------------------------------------
# STU

def _split_vertex(d: Diagram, w: int, first: int) -> Diagram:
    """Split external vertex ``w`` (valence 2) into two adjacent feet.

    Edge ``first`` moves to the new left foot, the other edge stays on the
    right foot.  Every label >= w shifts up by one.
    """
    seg = d.segment_of(w)

    def shift(v):
        return v + 1 if v > w else v

    edges = []
    for k, (a, b) in enumerate(d.edges):
        if w in (a, b) and k != first:
            a = w + 1 if a == w else shift(a)
            b = w + 1 if b == w else shift(b)
        else:
            a = w if a == w else shift(a)
            b = w if b == w else shift(b)
        edges.append((a, b))
    ext = list(d.ext)
    ext[seg - 1] += 1
    return Diagram(d.m, d.parity, d.flavor, tuple(ext), d.n_int, tuple(edges))


@dataclass(frozen=True)
class STUTriple:
    """Raw S, T, U diagrams sharing the degree-1 diagram ``D``.

    ``coefficients`` are the coefficients of canonical ``D`` in the
    coboundary of the canonical forms of S, T and U, each multiplied by the
    canonicalization sign, so that the cocycle condition reads
    ``sum(c * W(X)) == 0``.
    """

    s: Diagram
    t: Diagram
    u: Diagram
    d: Diagram
    coefficients: tuple[Fraction, Fraction, Fraction]


def stu_triple(d: Diagram, edge: int) -> STUTriple:
    """STU triple for a trivalent diagram and a mixed edge to a trivalent vertex."""
    a, b = d.edges[edge]
    if d.edge_kind((a, b)) != MIXED:
        raise DiagramError("STU needs a mixed edge")
    dd = contract(d, Contractible(edge=edge))
    w = min(a, b)
    incident = [k for k, e in enumerate(dd.edges) if w in e]
    if len(incident) != 2:
        raise DiagramError("contracted vertex is not 2-valent")
    t = _split_vertex(dd, w, incident[0])
    u = _split_vertex(dd, w, incident[1])
    target = canonicalize(dd)
    coeffs = []
    seen = set()
    for x in (d, t, u):
        sx = canonicalize(x)
        # when T and U are the same basis element it enters the relation once
        if sx.coefficient == 0 or target.coefficient == 0 or sx.diagram in seen:
            coeffs.append(Fraction(0))
            continue
        seen.add(sx.diagram)
        c = delta(sx.diagram).coefficient(target.diagram)
        coeffs.append(sx.coefficient * c / target.coefficient)
    return STUTriple(d, t, u, dd, tuple(coeffs))


def _stu_edges(d: Diagram) -> list[int]:
    return [k for k, e in enumerate(d.edges) if d.edge_kind(e) == MIXED
            and not all(d.is_external(v) for v in e)]


_STU_CACHE: dict[Diagram, DiagramSum] = {}


def stu_reduce(d: Diagram, choice: int = 0) -> DiagramSum:
    """Rewrite a trivalent diagram as a sum of chord diagrams.

    ``choice`` picks which usable leg is expanded first (modulo the number
    of usable legs); subsequent steps use the default.  The result for
    different choices agrees modulo 4T.
    """
    if not is_trivalent(d):
        raise DiagramError("stu_reduce needs a trivalent diagram")
    for comp in d.components():
        if not any(d.is_external(v) for v in comp):
            raise DiagramError("internal component not connected to a segment")
    sd = canonicalize(d)
    if sd.coefficient == 0:
        return DiagramSum()
    if choice == 0:
        return _reduce_canonical(sd.diagram).scale(sd.coefficient)
    return _reduce_step(sd.diagram, choice).scale(sd.coefficient)


def _reduce_canonical(d: Diagram) -> DiagramSum:
    hit = _STU_CACHE.get(d)
    if hit is None:
        hit = _reduce_step(d, 0)
        _STU_CACHE[d] = hit
    return hit


def _reduce_step(d: Diagram, choice: int) -> DiagramSum:
    if d.n_int == 0:
        return DiagramSum.of(d)
    legs = _stu_edges(d)
    usable = []
    for k in legs:
        tr = stu_triple(d, k)
        if tr.coefficients[0] != 0:
            usable.append(tr)
    if not usable:
        # every expansion is degenerate; the diagram carries no weight
        return DiagramSum()
    tr = usable[choice % len(usable)]
    cs, ct, cu = tr.coefficients
    out = DiagramSum()
    for x, c in ((tr.t, ct), (tr.u, cu)):
        if c == 0:
            continue
        sx = canonicalize(x)
        if sx.coefficient == 0:
            continue
        out = out + _reduce_canonical(sx.diagram).scale(-c * sx.coefficient / cs)
    return out


# ---------------------------------------------------------------------------
# chord-diagram relations

def _build(m, parity, flavor, segments, chords) -> Diagram:
    """Chord diagram from per-segment point lists and (tail, head) point pairs."""
    label = {}
    k = 0
    for seq in segments:
        for p in seq:
            k += 1
            label[p] = k
    return Diagram(m, parity, flavor, tuple(len(s) for s in segments), 0,
                   tuple((label[a], label[b]) for a, b in chords))


def _unoriented(d: Diagram) -> Diagram:
    return d.with_edges(tuple(sorted((min(a, b), max(a, b)) for a, b in d.edges)))


def orientation_twist(d: Diagram) -> int:
    """Sign relating a decorated chord diagram to its unoriented picture.

    This is the sign of the permutation that sorts the foot sequence
    tail_1, head_1, tail_2, head_2, ...; it flips with each chord
    orientation, as the odd-parity relation requires.  With this twist the
    classical unsigned 4T relation spans the same relations as the cocycle
    condition.  Only odd parity has such a diagonal twist.
    """
    if d.parity != ODD:
        raise DiagramError("orientation twist is defined for odd parity only")
    return permutation_sign([v for e in d.edges for v in e])


def _points(d: Diagram):
    segments = [list(d.segment_vertices(s)) for s in range(1, d.m + 1)]
    return segments, list(d.edges)


def _locate(segments, p):
    for s, seq in enumerate(segments):
        if p in seq:
            return s, seq.index(p)
    raise KeyError(p)


def _insert(segments, s, pos, p):
    out = [list(seq) for seq in segments]
    out[s].insert(pos, p)
    return out


def _normalize_relation(rel: DiagramSum) -> tuple | None:
    if not rel:
        return None
    items = sorted(rel.terms.items())
    lead = items[0][1]
    return tuple((d, c / lead) for d, c in items)


def one_t_relations(m: int, k: int, parity: str = ODD) -> list[DiagramSum]:
    """Chord diagrams with an isolated chord: both feet on one segment and no
    other chord with exactly one foot between them."""
    out = []
    for d in chord_diagrams(m, parity, LINK, k):
        segments, chords = _points(d)
        for a, b in chords:
            sa, sb = _locate(segments, a), _locate(segments, b)
            if sa[0] != sb[0]:
                continue
            lo, hi = sorted((sa[1], sb[1]))
            inside = set(segments[sa[0]][lo + 1:hi])
            if all((x in inside) == (y in inside) for x, y in chords if (x, y) != (a, b)):
                out.append(DiagramSum.of(d))
                break
    return out


def four_t_relations(m: int, k: int, flavor: str) -> list[DiagramSum]:
    """4T relations among order-k chord diagrams, plus 1T for links.

    A base configuration is an order-(k-1) chord diagram with one extra foot
    ``z``.  For each chord ``(p, q)`` a new chord from ``z`` to a moving foot
    is added, the foot placed just before or just after ``p`` and ``q``:

        (z, p-) - (z, p+) + (z, q-) - (z, q+) = 0

    on unoriented diagrams, each term carrying ``orientation_twist``.  For
    braids, terms whose new chord has both feet on one segment are dropped.
    Diagrams are odd parity (n = 3).
    """
    parity = ODD
    rels: dict[tuple, DiagramSum] = {}
    if k >= 2:
        for base in chord_diagrams(m, parity, LINK, k - 1):
            segments, chords = _points(base)
            if flavor == BRAID and any(_locate(segments, a)[0] == _locate(segments, b)[0]
                                       for a, b in chords):
                continue
            z, x = "z", "x"
            for s in range(m):
                for zpos in range(len(segments[s]) + 1):
                    with_z = _insert(segments, s, zpos, z)
                    for p, q in chords:
                        rel = DiagramSum()
                        for end in (p, q):
                            es, ei = _locate(with_z, end)
                            for offset, sign in ((0, 1), (1, -1)):
                                if flavor == BRAID and es == s:
                                    continue
                                segs = _insert(with_z, es, ei + offset, x)
                                dgm = _unoriented(_build(m, parity, flavor, segs, chords + [(z, x)]))
                                rel.add(dgm, sign * orientation_twist(dgm))
                        key = _normalize_relation(rel)
                        if key is not None and key not in rels:
                            rels[key] = rel
    out = [rels[key] for key in sorted(rels)]
    if flavor == LINK:
        out.extend(one_t_relations(m, k, parity))
    return out


# ---------------------------------------------------------------------------
# weight systems

@dataclass
class WeightSystem:
    m: int
    k: int
    flavor: str
    values: dict[Diagram, Fraction] = field(default_factory=dict)
    parity: str = ODD

    def __call__(self, d: Diagram | DiagramSum) -> Fraction:
        """Evaluate on a chord diagram, a trivalent diagram, or a sum of either."""
        if isinstance(d, DiagramSum):
            return sum((c * self(x) for x, c in d.terms.items()), Fraction(0))
        sd = canonicalize(d)
        if sd.coefficient == 0:
            return Fraction(0)
        if is_chord_diagram(d):
            return sd.coefficient * self.values.get(sd.diagram, Fraction(0))
        return self(stu_reduce(d))

    def on_basis(self) -> dict[Diagram, Fraction]:
        """Coefficients on the canonical trivalent basis at order k."""
        out = {}
        for d in trivalent_basis(self.m, self.flavor, self.k, self.parity):
            v = self(d)
            if v:
                out[d] = v
        return out


def trivalent_basis(m: int, flavor: str, k: int, parity: str = ODD) -> list[Diagram]:
    return [d for d in basis(m, parity, flavor, k, 0) if is_trivalent(d)]


def relation_matrix(relations: list[DiagramSum], diagrams: list[Diagram]) -> RationalMatrix:
    index = {d: i for i, d in enumerate(diagrams)}
    mat = RationalMatrix(len(relations), len(diagrams))
    for r, rel in enumerate(relations):
        for d, c in rel.terms.items():
            mat[r, index[d]] = c
    return mat


def weight_space(m: int, k: int, flavor: str, parity: str = ODD) -> list[WeightSystem]:
    """Basis of functionals on order-k chord diagrams killing 4T (and 1T).

    Even parity has no diagonal match with the unsigned 4T relation, so
    there the relations forced by the cocycle condition are used instead.
    """
    diagrams = chord_diagrams(m, parity, flavor, k)
    if parity == ODD:
        rels = four_t_relations(m, k, flavor)
    else:
        rels = cocycle_relations(m, k, flavor, parity)
    mat = relation_matrix(rels, diagrams)
    out = []
    for vec in mat.nullspace():
        values = {diagrams[j]: c for j, c in sorted(vec.items())}
        out.append(WeightSystem(m, k, flavor, values, parity))
    return out


def cocycle_relations(m: int, k: int, flavor: str, parity: str = ODD) -> list[DiagramSum]:
    """Chord-diagram relations forced by the cocycle condition after STU."""
    deg1 = basis(m, parity, flavor, k, 1)
    index = {d: i for i, d in enumerate(deg1)}
    acc: list[DiagramSum] = [DiagramSum() for _ in deg1]
    for g in trivalent_basis(m, flavor, k, parity):
        red = stu_reduce(g)
        for dd, c in delta(g).terms.items():
            acc[index[dd]] = acc[index[dd]] + red.scale(c)
    return [r for r in acc if r]


def is_cocycle(coefficients: dict[Diagram, Fraction], m: int, k: int, flavor: str,
               parity: str = ODD) -> bool:
    """Whether ``sum(c * G)`` over degree-0 diagrams has zero coboundary."""
    total = DiagramSum()
    for d, c in coefficients.items():
        for dd, cc in delta(d).terms.items():
            total.add(dd, c * cc, canonical=True)
    return not total

