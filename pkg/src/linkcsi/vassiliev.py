"""Singular links, skein resolutions and finite-type checks.

A double point of strands ``a`` and ``b`` is resolved by pushing strand
``a`` off along ``n = K_a' x K_b' / |K_a' x K_b'|`` by ``+-rho/2`` with the
bump ``(1 - tau^2)^2`` on the parameter window ``|t - t_a| < rho / |K_a'|``.
Pushing along ``+n`` puts ``a`` over ``b`` seen from ``n``, which is the
positive crossing; it carries sign +1 in the skein sum.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .diagrams import BRAID, ODD, Diagram, ParseError, canonicalize
from .geometry import GeometryError, LinkGeometry, _snap_tails, parse_link, strand_from_function
from .integrator import MCEstimate, _sub_seed

DEFAULT_RHO = 0.05


class RealizerError(ValueError):
    pass


@dataclass(frozen=True)
class Singularity:
    a: int          # 0-based strand indices
    ta: float
    b: int
    tb: float
    rho: float = DEFAULT_RHO


@dataclass(frozen=True)
class Bump:
    t0: float
    half_width: float
    direction: tuple
    amplitude: float

    def offset(self, t, order: int = 0):
        tau = (np.asarray(t, dtype=float) - self.t0) / self.half_width
        inside = np.abs(tau) < 1
        if order == 0:
            f = (1 - tau ** 2) ** 2
        elif order == 1:
            f = -4 * tau * (1 - tau ** 2) / self.half_width
        else:
            f = (12 * tau ** 2 - 4) / self.half_width ** 2
        f = np.where(inside, f, 0.0)
        return self.amplitude * f[..., None] * np.asarray(self.direction)


class DisplacedStrand:
    """A strand plus a sum of compactly supported bumps."""

    def __init__(self, base, bumps):
        self.base = base
        # sorted so the sum does not depend on the order bumps were added
        self.bumps = tuple(sorted(bumps, key=lambda b: (b.t0, b.amplitude)))

    def position(self, t):
        out = self.base.position(t)
        for b in self.bumps:
            out = out + b.offset(t, 0)
        return out

    def velocity(self, t):
        out = self.base.velocity(t)
        for b in self.bumps:
            out = out + b.offset(t, 1)
        return out

    def acceleration(self, t):
        out = self.base.acceleration(t)
        for b in self.bumps:
            out = out + b.offset(t, 2)
        return out


@dataclass
class SingularLink:
    base: LinkGeometry
    singularities: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.singularities)

    def validate(self, tol: float = 1e-6) -> list[str]:
        problems = []
        for i, s in enumerate(self.singularities):
            pa, ua = self.base.eval(s.a, s.ta)
            pb, ub = self.base.eval(s.b, s.tb)
            if np.linalg.norm(pa - pb) > tol:
                problems.append(f"singularity {i + 1}: strand points do not coincide")
            if np.linalg.norm(np.cross(ua, ub)) < 1e-3:
                problems.append(f"singularity {i + 1}: tangents are dependent")
            if s.rho <= 0:
                problems.append(f"singularity {i + 1}: rho must be positive")
        for i, j in itertools.combinations(range(self.k), 2):
            si, sj = self.singularities[i], self.singularities[j]
            ci = self.base.eval(si.a, si.ta)[0]
            cj = self.base.eval(sj.a, sj.ta)[0]
            if np.linalg.norm(ci - cj) <= si.rho + sj.rho:
                problems.append(f"balls of singularities {i + 1} and {j + 1} overlap")
        return problems

    def resolution_problems(self) -> list[str]:
        """Embedding problems of every resolution (the base itself is singular)."""
        problems = self.validate()
        if problems:
            return problems
        for signs in itertools.product((1, -1), repeat=self.k):
            name = "".join("+" if e > 0 else "-" for e in signs)
            problems += [f"resolution {name}: {p}" for p in resolution(self, signs).validate()]
        return problems

    def require_valid(self) -> None:
        problems = self.validate()
        if problems:
            raise GeometryError("; ".join(problems))


def _bump_for(base: LinkGeometry, s: Singularity, sign: int) -> Bump:
    ka = base.strands[s.a].velocity(s.ta)
    kb = base.strands[s.b].velocity(s.tb)
    n = np.cross(ka, kb)
    n = n / np.linalg.norm(n)
    return Bump(float(s.ta), float(s.rho / np.linalg.norm(ka)), tuple(n.tolist()),
                sign * s.rho / 2)


def resolution(sl: SingularLink, signs) -> LinkGeometry:
    """The resolution with the given per-singularity signs (+1 = positive)."""
    per_strand: dict[int, list[Bump]] = {}
    for s, e in zip(sl.singularities, signs):
        per_strand.setdefault(s.a, []).append(_bump_for(sl.base, s, e))
    strands = [DisplacedStrand(st, per_strand[i]) if i in per_strand else st
               for i, st in enumerate(sl.base.strands)]
    return LinkGeometry(strands, sl.base.flavor, sl.base.theta_cap,
                        name=f"{sl.base.name}{''.join('+' if e > 0 else '-' for e in signs)}")


def resolve(sl: SingularLink) -> list[tuple[int, LinkGeometry]]:
    """All 2^k resolutions with their overall signs, ``+`` before ``-``."""
    sl.require_valid()
    out = []
    for signs in itertools.product((1, -1), repeat=sl.k):
        out.append((math.prod(signs), resolution(sl, signs)))
    return out


def chord_diagram_of(sl: SingularLink, parity: str = ODD) -> Diagram:
    """Chord diagram recording where the double points sit on the strands.

    Chords are oriented from the foot on strand ``a`` to the foot on ``b``.
    """
    m = sl.base.m
    feet = []
    for i, s in enumerate(sl.singularities):
        feet.append((s.a, s.ta, i, 0))
        feet.append((s.b, s.tb, i, 1))
    feet.sort()
    label = {}
    for k, (_, _, i, end) in enumerate(feet, start=1):
        label[i, end] = k
    ext = tuple(sum(1 for f in feet if f[0] == seg) for seg in range(m))
    edges = tuple((label[i, 0], label[i, 1]) for i in range(sl.k))
    return Diagram(m, parity, sl.base.flavor, ext, 0, edges)


def finite_type_defect(V, sl: SingularLink, seed: int = 0) -> MCEstimate:
    """Alternating sum of ``V`` over the resolutions of ``sl``.

    ``V(link, seed)`` returns an ``MCEstimate`` or a number; each resolution
    is evaluated with a seed derived from ``seed`` and its index.
    """
    value, err2, samples = 0.0, 0.0, 0
    for i, (sign, link) in enumerate(resolve(sl)):
        est = V(link, _sub_seed(seed, i))
        if isinstance(est, MCEstimate):
            value += sign * est.value
            err2 += est.std_error ** 2
            samples += est.samples
        else:
            value += sign * float(est)
    return MCEstimate(value, math.sqrt(err2), samples, seed)


# ---------------------------------------------------------------------------
# realizers

def meeting_pair(k: int, radius: float = 0.5, length: float = 2.0, n_knots: int | None = None,
                 flavor: str = BRAID, lift: float = 0.25) -> tuple[LinkGeometry, list[float]]:
    """Two planar strands ``(L t, +-a(t), 0)`` meeting at ``k`` parameters.

    ``a(t) = r cos(j pi (t + 1) / 2)`` with ``j`` the smallest even number
    ``>= k`` has ``j`` simple zeros and vanishing slope at the window ends,
    so both strands end where they started.  For odd ``k`` the last zero is
    turned into an ordinary crossing by lifting strand 1 by ``lift`` in z.
    The zeros are placed on knots, so the two interpolants meet exactly
    there.  Returns the geometry and the ``k`` meeting parameters.
    """
    if k < 1:
        raise RealizerError("need at least one meeting point")
    j = k + k % 2
    n_knots = n_knots or 40 * j + 1
    if (n_knots - 1) % (2 * j):
        raise RealizerError("n_knots - 1 must be a multiple of 2j")
    t_lift = 1 - 1 / j
    w = 0.9 / j

    def bump(t):
        tau = (t - t_lift) / w
        return (1 - tau * tau) ** 2 if abs(tau) < 1 and k % 2 else 0.0

    def dbump(t):
        tau = (t - t_lift) / w
        return -4 * tau * (1 - tau * tau) / w if abs(tau) < 1 and k % 2 else 0.0

    def make(sign):
        up = lift if sign > 0 else 0.0

        def f(t):
            return np.array([length * t, sign * radius * np.cos(j * np.pi * (t + 1) / 2),
                             up * bump(t)])

        def df(t):
            return np.array([length, -sign * radius * j * np.pi / 2
                             * np.sin(j * np.pi * (t + 1) / 2), up * dbump(t)])
        return strand_from_function(f, df, n_knots)

    s1, s2 = make(1.0), make(-1.0)
    zeros = []
    for i in range(j):
        knot = (2 * i + 1) * (n_knots - 1) // (2 * j)
        s1.p[knot, 1] = s2.p[knot, 1] = 0.0
        zeros.append(float(s1.t[knot]))
    _snap_tails(s1)
    _snap_tails(s2)
    return LinkGeometry([s1, s2], flavor, name=f"meet-{k}"), zeros[:k]


def singular_braid(k: int = 2, rho: float = DEFAULT_RHO, **kw) -> SingularLink:
    """Two strands with ``k`` transverse double points (all chords horizontal)."""
    base, zeros = meeting_pair(k, **kw)
    return SingularLink(base, [Singularity(0, z, 1, z, rho) for z in zeros])


def realize(chord: Diagram, rho: float = DEFAULT_RHO) -> SingularLink:
    """A singular link whose double points are placed as in ``chord``.

    Implemented template: two strands with horizontal chords only (every
    chord joins segment 1 to segment 2 and the chord order agrees along
    both segments), for either flavor.
    """
    if chord.n_int != 0 or any(chord.valence(v) != 1 for v in range(1, chord.n_ext + 1)):
        raise RealizerError("not a chord diagram")
    k = len(chord.edges)
    if chord.m != 2:
        raise RealizerError(f"no realizer template for m={chord.m}")
    pairs = []
    for a, b in chord.edges:
        sa, sb = chord.segment_of(a), chord.segment_of(b)
        if {sa, sb} != {1, 2}:
            raise RealizerError("chord with both feet on one segment has no template")
        lo, hi = (a, b) if sa == 1 else (b, a)
        pairs.append((lo, hi, sa == 1))
    pairs.sort()
    second = [p[1] for p in pairs]
    if second != sorted(second):
        raise RealizerError("chord diagram is not horizontal")
    base, zeros = meeting_pair(k, flavor=chord.flavor)
    sings = []
    for (lo, hi, a_first), z in zip(pairs, zeros):
        sings.append(Singularity(0, z, 1, z, rho) if a_first else Singularity(1, z, 0, z, rho))
    return SingularLink(base, sings)


def weight_of_invariant(V, k: int, m: int, flavor: str, seed: int = 0,
                        parity: str = ODD, rho: float = DEFAULT_RHO):
    """Evaluate the alternating resolution sum of ``V`` on a realizer of every
    canonical order-k chord diagram.

    Returns ``(values, failures)``: values maps canonical diagrams to
    ``MCEstimate`` (already multiplied by the canonicalization sign of the
    realizer's chord diagram); failures maps diagrams to the reason no
    realizer was built.
    """
    from .diagrams import chord_diagrams

    values, failures = {}, {}
    for i, d in enumerate(chord_diagrams(m, parity, flavor, k)):
        try:
            sl = realize(d, rho)
        except RealizerError as exc:
            failures[d] = str(exc)
            continue
        sd = canonicalize(chord_diagram_of(sl, parity))
        if sd.diagram != d:
            failures[d] = "realizer produced a different chord diagram"
            continue
        est = finite_type_defect(V, sl, _sub_seed(seed, i))
        values[d] = est.scale(float(sd.coefficient))
    return values, failures


# ---------------------------------------------------------------------------
# file format

_SING = re.compile(
    r"^sing:\s*\(\s*(\d+)\s*,\s*([^)]+)\)\s*\(\s*(\d+)\s*,\s*([^)]+)\)\s*([^\s#]+)?\s*$")


def parse_singular_link(text: str) -> SingularLink:
    """Link file plus ``sing: (a,t_a) (b,t_b) rho`` lines (strands 1-based)."""
    body, sings = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line.startswith("sing:"):
            mt = _SING.match(line)
            if not mt:
                raise ParseError("expected 'sing: (a,t_a) (b,t_b) rho'", lineno, 1)
            try:
                a, ta, b, tb = int(mt[1]), float(mt[2]), int(mt[3]), float(mt[4])
                rho = float(mt[5]) if mt[5] else DEFAULT_RHO
            except ValueError:
                raise ParseError("bad number in singularity", lineno, 1) from None
            sings.append((lineno, Singularity(a - 1, ta, b - 1, tb, rho)))
            body.append("")
        else:
            body.append(raw)
    link = parse_link("\n".join(body))
    for lineno, s in sings:
        if not (0 <= s.a < link.m and 0 <= s.b < link.m):
            raise ParseError("singularity refers to a missing strand", lineno, 1)
    return SingularLink(link, [s for _, s in sings])


def format_singular_link(sl: SingularLink) -> str:
    from .geometry import format_link

    out = format_link(sl.base)
    for s in sl.singularities:
        out += f"sing: ({s.a + 1},{s.ta!r}) ({s.b + 1},{s.tb!r}) {s.rho!r}\n"
    return out
