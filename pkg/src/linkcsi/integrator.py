"""Monte Carlo evaluation of configuration space integrals in R^3.

For a degree-0 diagram the pulled-back form is top-dimensional on the
fiber: one column per strand parameter (segments in order, feet in linear
order) and three per free point (internal vertices in label order); two rows
per edge, the differential of the edge direction written in a right-handed
orthonormal frame of the tangent plane of S^2 at that direction.  The
integral is the determinant of this square matrix times the form density at
each edge direction, integrated over ordered strand parameters and free
points in R^3.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .diagrams import LINK, LOOP, Diagram, DiagramError, canonicalize, grading
from .geometry import (
    DISTINCT_TOL, Configuration, GeometryError, LinkGeometry, radial_log_density,
    radial_points, strand_parameters,
)

DEFAULT_CHUNK = 1 << 15
DEFAULT_STRATA = 4
MAX_STRATA = 4096


class NumericError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# forms on S^2

@dataclass(frozen=True)
class FormChoice:
    """Normalized form on S^2: the uniform one or a bump in the polar caps."""

    kind: str = "uniform"
    cap: float = 0.2
    sharpness: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "bump"):
            raise ValueError(f"unknown form {self.kind!r}")

    def density(self, v: np.ndarray) -> np.ndarray:
        """Density with respect to the area form, evaluated on unit vectors."""
        if self.kind == "uniform":
            return np.full(v.shape[:-1], 1.0 / (4 * np.pi))
        return _bump_profile(np.abs(v[..., 2]), self.cap, self.sharpness) / _bump_mass(
            self.cap, self.sharpness)


def _bump_profile(z, cap, sharpness):
    c = math.cos(cap)
    s = np.clip((z - c) / (1 - c), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(s > 0, np.exp(-sharpness / np.where(s > 0, s, 1.0)), 0.0)
    return out


def _bump_mass(cap, sharpness, n: int = 20001):
    # both caps: 2 * 2 pi * int_{cos cap}^{1} profile(z) dz
    z = np.linspace(math.cos(cap), 1.0, n)
    return 4 * np.pi * np.trapezoid(_bump_profile(z, cap, sharpness), z)


UNIFORM = FormChoice()


# ---------------------------------------------------------------------------
# estimates

@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    samples: int
    seed: int

    def as_row(self) -> str:
        return f"{self.value:.6f}\t{self.std_error:.6f}\t{self.samples}\t{self.seed}"

    def __add__(self, other: "MCEstimate") -> "MCEstimate":
        return MCEstimate(self.value + other.value, math.hypot(self.std_error, other.std_error),
                          self.samples + other.samples, self.seed)

    def scale(self, c: float) -> "MCEstimate":
        return MCEstimate(c * self.value, abs(c) * self.std_error, self.samples, self.seed)


def zero_estimate(seed: int = 0) -> MCEstimate:
    return MCEstimate(0.0, 0.0, 0, seed)


@dataclass
class AnomalyTable:
    """mu coefficients for single-strand chordless connected diagrams."""

    values: dict = field(default_factory=dict)

    def mu(self, d: Diagram) -> float:
        sd = canonicalize(d)
        return float(self.values.get(sd.diagram, 0.0)) * (1 if sd.coefficient >= 0 else -1)

    def set(self, d: Diagram, mu: float) -> None:
        sd = canonicalize(d)
        if sd.coefficient == 0:
            raise DiagramError("diagram vanishes by the relations")
        self.values[sd.diagram] = float(mu) * float(sd.coefficient)


# ---------------------------------------------------------------------------
# layout of a diagram's configuration space

@dataclass(frozen=True)
class Layout:
    """Where each vertex's coordinates live in the fiber."""

    counts: tuple[int, ...]      # strand parameters per segment
    n_free: int
    vertex_slot: dict            # vertex -> ('t', segment, index) or ('x', k)

    @property
    def dim(self) -> int:
        return sum(self.counts) + 3 * self.n_free


def layout(d: Diagram) -> Layout:
    slots = {}
    for seg in range(1, d.m + 1):
        for k, v in enumerate(d.segment_vertices(seg)):
            slots[v] = ("t", seg - 1, k)
    for k, v in enumerate(d.internal_vertices):
        slots[v] = ("x", k)
    return Layout(tuple(d.ext), d.n_int, slots)


def pushforward_degree(d: Diagram, n: int = 3) -> int:
    g = grading(d)
    return (n - 3) * g.order + g.degree


def check_integrable(d: Diagram, link: LinkGeometry) -> Layout:
    if d.m != link.m:
        raise DiagramError(f"diagram has {d.m} segments, link has {link.m} strands")
    lay = layout(d)
    if lay.dim != 2 * len(d.edges):
        raise DiagramError(
            f"fiber dimension {lay.dim} differs from form degree {2 * len(d.edges)}; "
            "the integral is not a function on the link space")
    if pushforward_degree(d) != 0:
        raise DiagramError("diagram does not have degree 0")
    return lay


def _frame(v):
    """Right-handed orthonormal (e1, e2) with e1 x e2 = v, batched over v."""
    a = np.zeros_like(v)
    idx = np.argmin(np.abs(v), axis=-1)
    np.put_along_axis(a, idx[..., None], 1.0, axis=-1)
    e1 = a - np.sum(a * v, axis=-1, keepdims=True) * v
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(v, e1)
    return e1, e2


def vertex_positions(d: Diagram, link: LinkGeometry, config: Configuration, lay: Layout):
    """Positions, velocities and accelerations for every vertex (batched)."""
    pos, vel, acc = {}, {}, {}
    for v, slot in lay.vertex_slot.items():
        if slot[0] == "t":
            _, seg, k = slot
            t = config.params[seg][:, k]
            s = link.strands[seg]
            pos[v] = s.position(t)
            vel[v] = s.velocity(t)
            acc[v] = s.acceleration(t)
        else:
            pos[v] = config.free[:, slot[1]]
    return pos, vel, acc


def edge_direction(link: LinkGeometry, config: Configuration, d: Diagram, edge: int):
    """Unit direction of edge ``edge``: head minus tail, or the unit tangent
    for a loop."""
    lay = layout(d)
    pos, vel, _ = vertex_positions(d, link, config, lay)
    a, b = d.edges[edge]
    if a == b:
        v = vel[a]
        return v / np.linalg.norm(v, axis=-1, keepdims=True)
    diff = pos[b] - pos[a]
    r = np.linalg.norm(diff, axis=-1, keepdims=True)
    if np.any(r <= DISTINCT_TOL):
        raise GeometryError("coincident endpoints")
    return diff / r


def _column_of(lay: Layout):
    cols = {}
    c = 0
    for seg, j in enumerate(lay.counts):
        for k in range(j):
            cols[("t", seg, k)] = c
            c += 1
    for k in range(lay.n_free):
        cols[("x", k)] = c
        c += 3
    return cols


def integrand(d: Diagram, link: LinkGeometry, config: Configuration,
              form: FormChoice = UNIFORM) -> np.ndarray:
    """Pulled-back form on the fiber, evaluated at a batch of configurations."""
    lay = check_integrable(d, link)
    n = config.free.shape[0] if config.free.ndim == 3 else len(config.params[0])
    D = lay.dim
    if D == 0:
        return np.ones(n)
    pos, vel, acc = vertex_positions(d, link, config, lay)
    cols = _column_of(lay)
    J = np.zeros((n, D, D))
    dens = np.ones(n)
    for row, (a, b) in enumerate(d.edges):
        if a == b:
            vv = vel[a]
            speed = np.linalg.norm(vv, axis=-1, keepdims=True)
            u = vv / speed
            e1, e2 = _frame(u)
            # d(unit tangent)/dt = P K'' / |K'|
            dd = (acc[a] - np.sum(acc[a] * u, axis=-1, keepdims=True) * u) / speed
            c = cols[lay.vertex_slot[a]]
            J[:, 2 * row, c] += np.sum(e1 * dd, axis=-1)
            J[:, 2 * row + 1, c] += np.sum(e2 * dd, axis=-1)
            dens *= form.density(u)
            continue
        diff = pos[b] - pos[a]
        r = np.linalg.norm(diff, axis=-1, keepdims=True)
        if np.any(r <= DISTINCT_TOL):
            raise NumericError("coincident endpoints in a sampled configuration")
        u = diff / r
        e1, e2 = _frame(u)
        # d u = P (dx_b - dx_a) / r; P drops out against e1, e2
        for vert, sgn in ((b, 1.0), (a, -1.0)):
            slot = lay.vertex_slot[vert]
            c = cols[slot]
            if slot[0] == "t":
                tv = vel[vert]
                J[:, 2 * row, c] += sgn * np.sum(e1 * tv, axis=-1) / r[:, 0]
                J[:, 2 * row + 1, c] += sgn * np.sum(e2 * tv, axis=-1) / r[:, 0]
            else:
                J[:, 2 * row, c:c + 3] += sgn * e1 / r
                J[:, 2 * row + 1, c:c + 3] += sgn * e2 / r
        dens *= form.density(u)
    return np.linalg.det(J) * dens


# ---------------------------------------------------------------------------
# proposals

@dataclass(frozen=True)
class SamplerSettings:
    param_scale: float = 1.0
    body_scale: float = 2.0      # radial proposal about the origin
    near_scale: float = 0.3      # radial proposals about neighbouring vertices
    body_weight: float = 0.2
    strata: int = DEFAULT_STRATA


def _stratified_uniforms(rng, n: int, dim: int, strata: int, offset: int):
    """Uniforms on [0,1]^dim with sample i in cell (i + offset) of a
    ``strata**dim`` grid (cycled), so every chunk covers cells evenly."""
    if dim == 0:
        return np.zeros((n, 0))
    per = strata
    while per > 1 and per ** dim > MAX_STRATA:
        per -= 1
    cells = per ** dim
    idx = (np.arange(n) + offset) % cells
    coords = np.empty((n, dim))
    for k in range(dim):
        coords[:, k] = idx % per
        idx = idx // per
    return (coords + rng.random((n, dim))) / per


def sample_for_diagram(d: Diagram, link: LinkGeometry, lay: Layout, rng, n: int,
                       settings: SamplerSettings):
    """Draw a batch adapted to ``d`` and return it with importance weights.

    Strand parameters use the sorted Cauchy map (stratified).  Free points
    are drawn in label order from a mixture of a broad radial proposal about
    the origin and narrow ones centred at already placed neighbours, which
    tames the inverse-square growth of the integrand near those vertices.
    """
    total_t = sum(lay.counts)
    u = _stratified_uniforms(rng, n, total_t, settings.strata, 0)
    params, logp = [], np.zeros(n)
    col = 0
    for j in lay.counts:
        if j == 0:
            params.append(np.zeros((n, 0)))
            continue
        t, lp = strand_parameters(u[:, col:col + j], settings.param_scale)
        col += j
        params.append(t)
        logp += lp
    free = np.zeros((n, lay.n_free, 3))
    placed = {}
    for seg, j in enumerate(lay.counts):
        for k in range(j):
            v = _vertex_at(lay, ("t", seg, k))
            placed[v] = link.strands[seg].position(params[seg][:, k])
    for k in range(lay.n_free):
        v = _vertex_at(lay, ("x", k))
        centers = [placed[w] for w in _neighbours(d, v) if w in placed]
        pts, lp = _mixture_draw(rng, n, centers, settings)
        free[:, k] = pts
        placed[v] = pts
        logp += lp
    weight = np.exp(-logp)
    return Configuration(params, free), weight


def _vertex_at(lay: Layout, slot):
    for v, s in lay.vertex_slot.items():
        if s == slot:
            return v
    raise KeyError(slot)


def _neighbours(d: Diagram, v: int) -> list[int]:
    out = []
    for a, b in d.edges:
        if a == v and b != v:
            out.append(b)
        elif b == v and a != v:
            out.append(a)
    return sorted(set(out))


def _mixture_draw(rng, n, centers, settings: SamplerSettings):
    k = len(centers)
    if k == 0:
        weights = np.array([1.0])
    else:
        weights = np.r_[settings.body_weight, np.full(k, (1 - settings.body_weight) / k)]
    comp = rng.choice(len(weights), size=n, p=weights)
    u = rng.random((n, 3))
    pts = np.empty((n, 3))
    allc = [np.zeros((n, 3))] + list(centers)
    scales = [settings.body_scale] + [settings.near_scale] * k
    for c in range(len(weights)):
        sel = comp == c
        if np.any(sel):
            p, _ = radial_points(u[sel], allc[c][sel], scales[c])
            pts[sel] = p
    dens = np.zeros(n)
    for c in range(len(weights)):
        rho = np.linalg.norm(pts - allc[c], axis=-1)
        dens += weights[c] * np.exp(radial_log_density(np.maximum(rho, 1e-300), scales[c]))
    return pts, np.log(dens)


# ---------------------------------------------------------------------------
# integration

def _chunk_sums(args):
    d, link, form, seed, index, n, settings = args
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))
    lay = check_integrable(d, link)
    config, w = sample_for_diagram(d, link, lay, rng, n, settings)
    f = integrand(d, link, config, form) * w
    if not np.all(np.isfinite(f)):
        bad = int(np.nonzero(~np.isfinite(f))[0][0])
        raise NumericError(
            f"non-finite sample in chunk {index}: params="
            f"{[p[bad].tolist() for p in config.params]}, free={config.free[bad].tolist()}")
    return math.fsum(f.tolist()), math.fsum((f * f).tolist()), n


def _chunks(samples: int, chunk: int):
    out = []
    left = samples
    while left > 0:
        out.append(min(chunk, left))
        left -= chunk
    return out


def _strand_sets(d: Diagram, comp: set[int]) -> set[int]:
    return {d.segment_of(v) for v in comp if d.is_external(v)}


def component_diagrams(d: Diagram) -> list[Diagram]:
    """Split ``d`` into its connected components, each a diagram on all m
    segments with only its own vertices."""
    comps = d.components()
    if len(comps) == 1:
        return [d]
    out = []
    for comp in comps:
        keep = sorted(comp)
        ext = [sum(1 for v in keep if d.is_external(v) and d.segment_of(v) == s)
               for s in range(1, d.m + 1)]
        relabel = {v: i for i, v in enumerate(keep, start=1)}
        edges = tuple((relabel[a], relabel[b]) for a, b in d.edges if a in comp)
        out.append(Diagram(d.m, d.parity, d.flavor, tuple(ext),
                           sum(1 for v in keep if not d.is_external(v)), edges))
    return out


def integrate(d: Diagram, link: LinkGeometry, form: FormChoice = UNIFORM,
              samples: int = 100_000, seed: int = 0, workers: int = 1,
              chunk: int = DEFAULT_CHUNK, settings: SamplerSettings | None = None) -> MCEstimate:
    """Importance-sampled estimate of the configuration space integral of ``d``.

    Components that sit on pairwise disjoint sets of strands are integrated
    separately and multiplied; otherwise the ordering of feet along a shared
    strand couples them and the diagram is integrated as a whole.
    """
    settings = settings or SamplerSettings()
    check_integrable(d, link)
    comps = component_diagrams(d)
    if len(comps) > 1:
        sets = [_strand_sets(d, c) for c in d.components()]
        disjoint = all(not (sets[i] & sets[j]) for i in range(len(sets))
                       for j in range(i + 1, len(sets)))
        if disjoint:
            ests = [integrate(c, link, form, samples, _sub_seed(seed, i), workers, chunk, settings)
                    for i, c in enumerate(comps)]
            return _product(ests, samples, seed)
    return _integrate_connected(d, link, form, samples, seed, workers, chunk, settings)


def _sub_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, 7919, i]).generate_state(1)[0])


def _product(ests, samples, seed) -> MCEstimate:
    value = math.prod(e.value for e in ests)
    err2 = 0.0
    for i, e in enumerate(ests):
        others = math.prod(x.value for j, x in enumerate(ests) if j != i)
        err2 += (others * e.std_error) ** 2
    return MCEstimate(value, math.sqrt(err2), samples, seed)


def _integrate_connected(d, link, form, samples, seed, workers, chunk, settings) -> MCEstimate:
    sizes = _chunks(int(samples), chunk)
    jobs = [(d, link, form, seed, i, n, settings) for i, n in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_chunk_sums, jobs))
    else:
        parts = [_chunk_sums(j) for j in jobs]
    s = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    n = sum(p[2] for p in parts)
    mean = s / n
    var = max(0.0, s2 / n - mean * mean)
    return MCEstimate(mean, math.sqrt(var / max(1, n - 1)), n, seed)


# ---------------------------------------------------------------------------
# anomaly and invariants

def self_linking_diagram(m: int, strand: int, parity: str = "odd", flavor: str = "link") -> Diagram:
    ext = [0] * m
    ext[strand] = 2
    first = sum(ext[:strand]) + 1
    return Diagram(m, parity, flavor, tuple(ext), 0, ((first, first + 1),))


def anomaly_correction(d: Diagram, link: LinkGeometry, table: AnomalyTable,
                       samples: int = 100_000, seed: int = 0, workers: int = 1) -> MCEstimate:
    """mu(d) times the integral over t1 < t2 on the strand carrying ``d`` of
    the pullback of the area form by (x2 - x1)/|x2 - x1|."""
    if len(d.components()) != 1:
        raise DiagramError("anomaly correction needs a connected diagram")
    segs = {d.segment_of(v) for v in range(1, d.n_ext + 1)}
    if len(segs) != 1:
        raise DiagramError("anomaly correction needs all feet on one strand")
    if any(d.edge_kind(e) in ("chord", LOOP) for e in d.edges):
        raise DiagramError("anomaly correction applies to diagrams without chords")
    mu = table.mu(d)
    if mu == 0:
        return zero_estimate(seed)
    # the chord with both feet on one strand is only a diagram of the link
    # flavor, so the integral is taken on the geometry viewed as a link
    gauss = self_linking_diagram(d.m, segs.pop() - 1, d.parity, LINK)
    as_link = LinkGeometry(link.strands, LINK, link.theta_cap, link.name)
    est = integrate(gauss, as_link, UNIFORM, samples, seed, workers)
    return est.scale(mu)


def needs_anomaly(d: Diagram) -> bool:
    if len(d.components()) != 1 or d.n_int == 0:
        return False
    segs = {d.segment_of(v) for v in range(1, d.n_ext + 1)}
    return len(segs) == 1 and not any(d.edge_kind(e) == "chord" for e in d.edges)


def invariant(weight, link: LinkGeometry, samples: int = 100_000, seed: int = 0,
              table: AnomalyTable | None = None, workers: int = 1,
              settings: SamplerSettings | None = None) -> MCEstimate:
    """sum over the trivalent basis of W(G) (I_G - anomaly_G)."""
    if weight.m != link.m:
        raise DiagramError("weight system and link have different strand counts")
    if weight.flavor != link.flavor:
        raise DiagramError(f"weight system is for {weight.flavor}s, geometry is a {link.flavor}")
    table = table or AnomalyTable()
    total = MCEstimate(0.0, 0.0, 0, seed)
    for i, (g, c) in enumerate(sorted(weight.on_basis().items())):
        sub = _sub_seed(seed, i)
        est = integrate(g, link, UNIFORM, samples, sub, workers, settings=settings)
        if needs_anomaly(g):
            est = est + anomaly_correction(g, link, table, samples, sub, workers).scale(-1)
        total = total + est.scale(float(c))
    return MCEstimate(total.value, total.std_error, samples, seed)


def weight_coefficients(weight) -> dict[Diagram, Fraction]:
    return weight.on_basis()
