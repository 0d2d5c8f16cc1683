"""Decorated graphs on m oriented segments.

Vertices carry a single global numbering ``1..V``: the external vertices of
segment 1 in linear order, then those of segment 2, and so on, followed by
the internal vertices.  An edge is a ``(tail, head)`` pair of global numbers.
For even parity the position of an edge in ``Diagram.edges`` is its label
(1-based); for odd parity edge order carries no meaning.

Segment endpoints are implicit and never counted as external vertices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

ODD = "odd"
EVEN = "even"
LINK = "link"
BRAID = "braid"

PARITIES = (ODD, EVEN)
FLAVORS = (LINK, BRAID)

INTERNAL = "internal"
MIXED = "mixed"
CHORD = "chord"
LOOP = "loop"


class DiagramError(ValueError):
    pass


class ResourceLimitError(RuntimeError):
    """Raised when an enumeration would exceed the configured vertex cap."""

    def __init__(self, cap_name: str, value: int, cap: int):
        super().__init__(f"{cap_name}={value} exceeds cap {cap}")
        self.cap_name = cap_name
        self.value = value
        self.cap = cap


@dataclass(frozen=True)
class Grading:
    order: int
    degree: int


@dataclass(frozen=True, order=True)
class Diagram:
    m: int
    parity: str
    flavor: str
    ext: tuple[int, ...]
    n_int: int = 0
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise DiagramError(f"unknown parity {self.parity!r}")
        if self.flavor not in FLAVORS:
            raise DiagramError(f"unknown flavor {self.flavor!r}")
        if self.m < 1 or len(self.ext) != self.m:
            raise DiagramError("ext must list one vertex count per segment")
        object.__setattr__(self, "ext", tuple(self.ext))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))

    # vertex bookkeeping

    @property
    def n_ext(self) -> int:
        return sum(self.ext)

    @property
    def n_vertices(self) -> int:
        return self.n_ext + self.n_int

    def is_external(self, v: int) -> bool:
        return 1 <= v <= self.n_ext

    def segment_of(self, v: int) -> int:
        """1-based segment of external vertex ``v``."""
        if not self.is_external(v):
            raise DiagramError(f"vertex {v} is not external")
        acc = 0
        for seg, count in enumerate(self.ext, start=1):
            acc += count
            if v <= acc:
                return seg
        raise AssertionError

    def segment_vertices(self, seg: int) -> range:
        start = sum(self.ext[: seg - 1]) + 1
        return range(start, start + self.ext[seg - 1])

    @property
    def internal_vertices(self) -> range:
        return range(self.n_ext + 1, self.n_vertices + 1)

    def edge_kind(self, edge: tuple[int, int]) -> str:
        a, b = edge
        ea, eb = self.is_external(a), self.is_external(b)
        if ea and eb:
            return LOOP if a == b else CHORD
        if ea or eb:
            return MIXED
        return INTERNAL

    def valence(self, v: int) -> int:
        return sum((a == v) + (b == v) for a, b in self.edges)

    def arcs(self) -> list[tuple[int, int]]:
        """Consecutive labeled external pairs; end-arcs are excluded."""
        out = []
        for seg in range(1, self.m + 1):
            vs = self.segment_vertices(seg)
            out.extend((v, v + 1) for v in vs[:-1])
        return out

    def components(self) -> list[set[int]]:
        """Connected components of the graph, arcs disregarded."""
        parent = list(range(self.n_vertices + 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges:
            parent[find(a)] = find(b)
        groups: dict[int, set[int]] = {}
        for v in range(1, self.n_vertices + 1):
            groups.setdefault(find(v), set()).add(v)
        return sorted(groups.values(), key=min)

    def with_edges(self, edges) -> "Diagram":
        return Diagram(self.m, self.parity, self.flavor, self.ext, self.n_int, tuple(edges))


def empty_diagram(m: int, parity: str = ODD, flavor: str = LINK) -> Diagram:
    return Diagram(m, parity, flavor, (0,) * m)


def validate(d: Diagram) -> list[str]:
    """Return human-readable violations of the structural invariants."""
    problems = []
    V = d.n_vertices
    for a, b in d.edges:
        if not (1 <= a <= V and 1 <= b <= V):
            problems.append(f"edge ({a},{b}) references unknown vertex")
    if problems:
        return problems
    for a, b in d.edges:
        if a == b and not d.is_external(a):
            problems.append("edge connects internal vertex to itself")
    for v in d.internal_vertices:
        if d.valence(v) < 3:
            problems.append("internal vertex valence < 3")
            break
    for v in range(1, d.n_ext + 1):
        if d.valence(v) < 1:
            problems.append("external vertex without edges")
            break
    if d.flavor == BRAID:
        if any(a == b for a, b in d.edges):
            problems.append("braid diagram contains loop")
        if any(a != b and d.is_external(a) and d.is_external(b)
               and d.segment_of(a) == d.segment_of(b) for a, b in d.edges):
            problems.append("braid diagram contains single-segment chord")
    for comp in d.components():
        if not any(d.is_external(v) for v in comp):
            problems.append("component without external vertices")
            break
    return problems


def require_valid(d: Diagram) -> None:
    problems = validate(d)
    if problems:
        raise DiagramError("; ".join(problems))


def grading(d: Diagram) -> Grading:
    require_valid(d)
    e, vi, ve = len(d.edges), d.n_int, d.n_ext
    return Grading(order=e - vi, degree=2 * e - 3 * vi - ve)


# ---------------------------------------------------------------------------
# canonical forms

@dataclass(frozen=True)
class SignedDiagram:
    coefficient: Fraction
    diagram: Diagram


def permutation_sign(seq: Iterable) -> int:
    """Sign of the permutation sorting ``seq`` (entries must be distinct)."""
    seq = list(seq)
    inversions = sum(1 for i, j in itertools.combinations(range(len(seq)), 2) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


def is_zero_by_relations(d: Diagram) -> bool:
    """Double edges, degenerate internal loops, and braid loops/chords vanish."""
    seen = set()
    for a, b in d.edges:
        if a == b and not d.is_external(a):
            return True
        key = (min(a, b), max(a, b))
        if key in seen:
            return True
        seen.add(key)
    if d.flavor == BRAID:
        for a, b in d.edges:
            if d.is_external(a) and d.is_external(b) and d.segment_of(a) == d.segment_of(b):
                return True
    return False


def _relabeled_key(d: Diagram, perm: tuple[int, ...]):
    """Apply an internal relabeling and return (sorted edge key, sign)."""
    ne = d.n_ext

    def f(v):
        return v if v <= ne else ne + perm[v - ne - 1]

    mapped = [(f(a), f(b)) for a, b in d.edges]
    if d.parity == ODD:
        flips = sum(1 for a, b in mapped if a > b)
        oriented = [(min(a, b), max(a, b)) for a, b in mapped]
        key = tuple(sorted(oriented))
        sign = permutation_sign(perm) * (-1) ** flips
    else:
        oriented = [(min(a, b), max(a, b)) for a, b in mapped]
        key = tuple(sorted(oriented))
        sign = permutation_sign(oriented)
    return key, sign


def canonicalize(d: Diagram) -> SignedDiagram:
    """Return ``(c, D)`` with ``d == c * D`` and ``D`` the canonical representative.

    ``c`` is 0 when a relation kills ``d``, including the case where an
    internal symmetry of ``d`` acts with sign -1.
    """
    if is_zero_by_relations(d):
        return SignedDiagram(Fraction(0), _strip(d))
    best = None
    signs = set()
    for perm in itertools.permutations(range(1, d.n_int + 1)):
        key, sign = _relabeled_key(d, perm)
        if best is None or key < best:
            best, signs = key, {sign}
        elif key == best:
            signs.add(sign)
    canon = d.with_edges(best)
    if len(signs) > 1:
        return SignedDiagram(Fraction(0), canon)
    return SignedDiagram(Fraction(signs.pop()), canon)


def _strip(d: Diagram) -> Diagram:
    # representative for a zero diagram; only used so callers get a Diagram back
    return d.with_edges(tuple(sorted((min(a, b), max(a, b)) for a, b in d.edges)))


def relabel(d: Diagram, internal_perm: tuple[int, ...] | None = None,
            edge_perm: tuple[int, ...] | None = None,
            flips: Iterable[int] = ()) -> tuple[Diagram, int]:
    """Relabel ``d`` and return the new diagram with the relation sign.

    ``internal_perm[k]`` is the new label (1-based among internals) of the
    k-th internal vertex; ``edge_perm[k]`` the new position of edge k;
    ``flips`` lists edge indices whose orientation is reversed.  The sign
    ``s`` satisfies ``d == s * new``.
    """
    ne = d.n_ext
    internal_perm = tuple(internal_perm or range(1, d.n_int + 1))
    edge_perm = tuple(edge_perm or range(len(d.edges)))
    flips = set(flips)

    def f(v):
        return v if v <= ne else ne + internal_perm[v - ne - 1]

    new_edges = [None] * len(d.edges)
    for k, (a, b) in enumerate(d.edges):
        a, b = f(a), f(b)
        if k in flips:
            a, b = b, a
        new_edges[edge_perm[k]] = (a, b)
    sign = 1
    if d.parity == ODD:
        sign = permutation_sign(internal_perm) * (-1) ** sum(
            1 for k in flips if d.edges[k][0] != d.edges[k][1])
    else:
        sign = permutation_sign(edge_perm)
    return d.with_edges(tuple(new_edges)), sign


# ---------------------------------------------------------------------------
# formal sums

class DiagramSum:
    """Rational linear combination of canonical diagrams."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[Diagram, Fraction] = {}
        if terms:
            for dgm, c in dict(terms).items():
                self.add(dgm, c)

    @classmethod
    def of(cls, d: Diagram, coefficient=1) -> "DiagramSum":
        out = cls()
        out.add(d, coefficient)
        return out

    def add(self, d: Diagram, coefficient=1, canonical: bool = False) -> None:
        if not canonical:
            sd = canonicalize(d)
            coefficient = Fraction(coefficient) * sd.coefficient
            d = sd.diagram
        coefficient = Fraction(coefficient)
        if coefficient == 0:
            return
        c = self.terms.get(d, Fraction(0)) + coefficient
        if c == 0:
            self.terms.pop(d, None)
        else:
            self.terms[d] = c

    def __add__(self, other: "DiagramSum") -> "DiagramSum":
        out = DiagramSum()
        out.terms = dict(self.terms)
        for d, c in other.terms.items():
            out.add(d, c, canonical=True)
        return out

    def __sub__(self, other: "DiagramSum") -> "DiagramSum":
        return self + other.scale(-1)

    def scale(self, c) -> "DiagramSum":
        c = Fraction(c)
        out = DiagramSum()
        if c:
            out.terms = {d: v * c for d, v in self.terms.items()}
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, DiagramSum) and self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Diagram, Fraction]]:
        return iter(sorted(self.terms.items()))

    def coefficient(self, d: Diagram) -> Fraction:
        return self.terms.get(d, Fraction(0))

    def __repr__(self) -> str:
        return f"DiagramSum({len(self.terms)} terms)"


# ---------------------------------------------------------------------------
# enumeration

DEFAULT_MAX_VERTICES = 12


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def _candidate_pairs(template: Diagram) -> list[tuple[int, int]]:
    V = template.n_vertices
    out = []
    for a in range(1, V + 1):
        if template.is_external(a) and template.flavor == LINK:
            out.append((a, a))
        for b in range(a + 1, V + 1):
            if (template.flavor == BRAID and template.is_external(a) and template.is_external(b)
                    and template.segment_of(a) == template.segment_of(b)):
                continue
            out.append((a, b))
    return out


def _edge_sets(template: Diagram, n_edges: int, chords_only: bool) -> Iterator[tuple]:
    """Simple edge sets with the valence lower bounds, by backtracking."""
    pairs = _candidate_pairs(template)
    if chords_only:
        pairs = [p for p in pairs if p[0] != p[1]]
    V = template.n_vertices
    ne = template.n_ext
    need = [0] + [1 if v <= ne else 3 for v in range(1, V + 1)]
    if chords_only:
        need = [0] + [1] * V
    # last index at which each vertex still appears in pairs
    last = [-1] * (V + 1)
    for idx, (a, b) in enumerate(pairs):
        last[a] = max(last[a], idx)
        last[b] = max(last[b], idx)
    val = [0] * (V + 1)
    chosen: list[tuple[int, int]] = []

    def rec(start):
        if len(chosen) == n_edges:
            if all(val[v] >= need[v] for v in range(1, V + 1)):
                yield tuple(chosen)
            return
        remaining = n_edges - len(chosen)
        deficit = sum(max(0, need[v] - val[v]) for v in range(1, V + 1))
        if deficit > 2 * remaining:
            return
        for idx in range(start, len(pairs) - remaining + 1):
            # a vertex whose last chance has passed can no longer be fixed
            if any(last[v] < idx and val[v] < need[v] for v in range(1, V + 1)):
                return
            a, b = pairs[idx]
            chosen.append((a, b))
            val[a] += 1
            val[b] += 1
            yield from rec(idx + 1)
            val[a] -= 1
            val[b] -= 1
            chosen.pop()

    yield from rec(0)


def enumerate_basis(m: int, parity: str, flavor: str, order: int, degree: int,
                    max_vertices: int = DEFAULT_MAX_VERTICES,
                    chords_only: bool = False) -> list[Diagram]:
    """All canonical nonzero diagrams of the given bidegree, sorted."""
    if order < 1 or m < 1:
        raise DiagramError("enumerate_basis needs order >= 1 and m >= 1")
    n_vertices = 2 * order - degree
    if n_vertices > max_vertices:
        raise ResourceLimitError("max_vertices", n_vertices, max_vertices)
    if n_vertices < 1:
        return []
    found: set[Diagram] = set()
    int_range = [0] if chords_only else range(0, n_vertices)
    for n_int in int_range:
        n_ext = n_vertices - n_int
        n_edges = order + n_int
        if n_ext < 1:
            continue
        for ext in compositions(n_ext, m):
            template = Diagram(m, parity, flavor, ext, n_int)
            for edges in _edge_sets(template, n_edges, chords_only):
                d = template.with_edges(edges)
                if any(not any(d.is_external(v) for v in comp) for comp in d.components()):
                    continue
                sd = canonicalize(d)
                if sd.coefficient != 0:
                    found.add(sd.diagram)
    return sorted(found)


def chord_diagrams(m: int, parity: str, flavor: str, k: int) -> list[Diagram]:
    """Canonical chord diagrams of order ``k`` (2k univalent external vertices)."""
    return enumerate_basis(m, parity, flavor, k, 0, max_vertices=max(DEFAULT_MAX_VERTICES, 2 * k),
                           chords_only=True)


# ---------------------------------------------------------------------------
# text format

def vertex_names(d: Diagram) -> dict[int, str]:
    names = {}
    for seg in range(1, d.m + 1):
        for k, v in enumerate(d.segment_vertices(seg), start=1):
            names[v] = f"v{seg}_{k}"
    for k, v in enumerate(d.internal_vertices, start=1):
        names[v] = f"u{k}"
    return names


def format_diagram(d: Diagram) -> str:
    names = vertex_names(d)
    lines = [f"m={d.m} parity={d.parity} flavor={d.flavor}"]
    for seg in range(1, d.m + 1):
        vs = " ".join(names[v] for v in d.segment_vertices(seg))
        lines.append(f"ext {seg}: {vs}".rstrip())
    lines.append(("int: " + " ".join(names[v] for v in d.internal_vertices)).rstrip())
    for k, (a, b) in enumerate(d.edges, start=1):
        tag = f"edge[{k}]" if d.parity == EVEN else "edge"
        lines.append(f"{tag} {names[a]} -> {names[b]}")
    return "\n".join(lines) + "\n"


class ParseError(DiagramError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def parse_diagram(text: str, start_line: int = 1) -> Diagram:
    """Parse one diagram record; vertex names are arbitrary tokens."""
    lines = [(n, ln.strip()) for n, ln in enumerate(text.splitlines(), start=start_line)]
    lines = [(n, ln) for n, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty diagram", start_line)
    n0, header = lines[0]
    fields = {}
    for tok in header.split():
        if "=" not in tok:
            raise ParseError(f"bad header token {tok!r}", n0, header.index(tok) + 1)
        k, v = tok.split("=", 1)
        fields[k] = v
    try:
        m = int(fields["m"])
        parity = fields["parity"]
        flavor = fields["flavor"]
    except (KeyError, ValueError):
        raise ParseError("header must be 'm=<int> parity=<even|odd> flavor=<link|braid>'", n0)
    if parity not in PARITIES or flavor not in FLAVORS or m < 1:
        raise ParseError("invalid header values", n0)
    segs: dict[int, list[str]] = {}
    internals: list[str] = []
    raw_edges: list[tuple[int | None, str, str, int]] = []
    for n, ln in lines[1:]:
        if ln.startswith("ext"):
            head, _, rest = ln.partition(":")
            try:
                seg = int(head.split()[1])
            except (IndexError, ValueError):
                raise ParseError("expected 'ext <seg>: ...'", n)
            if not 1 <= seg <= m or seg in segs:
                raise ParseError(f"bad or repeated segment {seg}", n)
            segs[seg] = rest.split()
        elif ln.startswith("int"):
            internals = ln.partition(":")[2].split()
        elif ln.startswith("edge"):
            tag, _, rest = ln.partition(" ")
            label = None
            if tag.startswith("edge["):
                try:
                    label = int(tag[5:-1])
                except ValueError:
                    raise ParseError("bad edge label", n, 6)
            elif tag != "edge":
                raise ParseError(f"unknown record {tag!r}", n)
            parts = rest.split("->")
            if len(parts) != 2:
                raise ParseError("expected '<tail> -> <head>'", n, len(tag) + 2)
            raw_edges.append((label, parts[0].strip(), parts[1].strip(), n))
        else:
            raise ParseError(f"unknown record {ln.split()[0]!r}", n)
    ids: dict[str, int] = {}
    ext = []
    for seg in range(1, m + 1):
        names = segs.get(seg, [])
        ext.append(len(names))
        for name in names:
            if name in ids:
                raise ParseError(f"duplicate vertex {name!r}", n0)
            ids[name] = len(ids) + 1
    for name in internals:
        if name in ids:
            raise ParseError(f"duplicate vertex {name!r}", n0)
        ids[name] = len(ids) + 1
    edges = [None] * len(raw_edges)
    for pos, (label, a, b, n) in enumerate(raw_edges):
        for name in (a, b):
            if name not in ids:
                raise ParseError(f"unknown vertex {name!r}", n)
        if parity == EVEN:
            if label is None:
                raise ParseError("even parity edges need a label", n)
            if not 1 <= label <= len(raw_edges) or edges[label - 1] is not None:
                raise ParseError("edge labels must be a permutation of 1..|e|", n)
            edges[label - 1] = (ids[a], ids[b])
        else:
            if label is not None:
                raise ParseError("odd parity edges carry no label", n)
            edges[pos] = (ids[a], ids[b])
    return Diagram(m, parity, flavor, tuple(ext), len(internals), tuple(edges))


def format_sum(s: DiagramSum) -> str:
    """Records separated by blank lines, each headed by ``coef <rational>``."""
    return "\n".join(f"coef {c}\n{format_diagram(d)}" for d, c in s)


def parse_sum(text: str) -> DiagramSum:
    out = DiagramSum()
    blocks = _split_blocks(text)
    for start, block in blocks:
        first, _, rest = block.partition("\n")
        if not first.startswith("coef "):
            raise ParseError("expected 'coef <rational>'", start)
        out.add(parse_diagram(rest, start + 1), Fraction(first.split()[1]))
    return out


def _split_blocks(text: str) -> list[tuple[int, str]]:
    blocks, cur, start = [], [], 1
    for n, ln in enumerate(text.splitlines(), start=1):
        if ln.strip():
            if not cur:
                start = n
            cur.append(ln)
        elif cur:
            blocks.append((start, "\n".join(cur)))
            cur = []
    if cur:
        blocks.append((start, "\n".join(cur)))
    return blocks
