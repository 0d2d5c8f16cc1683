"""String links and braids in R^3 as C^1 cubic Hermite strands.

Each strand is interpolated on the parameter window [-1, 1] from knots
``(t, point, derivative)`` and continues as the single affine map
``a + t b`` outside, with ``b`` a positive multiple of (1, 0, 0).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .diagrams import BRAID, FLAVORS, LINK, ParseError

E_X = np.array([1.0, 0.0, 0.0])
DEFAULT_THETA_CAP = 0.2
DISTINCT_TOL = 1e-12


class GeometryError(ValueError):
    pass


class HermiteStrand:
    """C^1 piecewise cubic curve with exact affine tails."""

    def __init__(self, knots, points, derivatives):
        t = np.asarray(knots, dtype=float)
        p = np.asarray(points, dtype=float).reshape(len(t), 3)
        d = np.asarray(derivatives, dtype=float).reshape(len(t), 3)
        if len(t) < 2 or np.any(np.diff(t) <= 0):
            raise GeometryError("knots must be strictly increasing with at least two entries")
        if abs(t[0] + 1) > 1e-12 or abs(t[-1] - 1) > 1e-12:
            raise GeometryError("knots must start at -1 and end at 1")
        t[0], t[-1] = -1.0, 1.0
        self.t, self.p, self.d = t, p, d
        # the same affine map a + t b on both sides of the window
        b = d[0]
        if not np.allclose(d[-1], b, rtol=1e-9, atol=1e-9):
            raise GeometryError("tail derivatives differ at the two window ends")
        if b[0] <= 0 or np.linalg.norm(b[1:]) > 1e-9 * max(1.0, b[0]):
            raise GeometryError("tails must be parallel to (1,0,0) and increasing")
        if not np.allclose(p[-1] - p[0], 2 * b, rtol=1e-9, atol=1e-9):
            raise GeometryError("tails do not lie on a single affine map")
        self.b = b.copy()
        self.a = p[0] + b

    def affine(self, t):
        t = np.asarray(t, dtype=float)
        return self.a + t[..., None] * self.b

    def _local(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        h = self.t[k + 1] - self.t[k]
        s = (t - self.t[k]) / h
        return t, k, h, s

    def position(self, t):
        t, k, h, s = self._local(t)
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        inside = (h00[..., None] * self.p[k] + (h10 * h)[..., None] * self.d[k]
                  + h01[..., None] * self.p[k + 1] + (h11 * h)[..., None] * self.d[k + 1])
        outside = (t < -1) | (t > 1)
        return np.where(outside[..., None], self.affine(t), inside)

    def velocity(self, t):
        t, k, h, s = self._local(t)
        s2 = s * s
        g00 = (6 * s2 - 6 * s) / h
        g10 = 3 * s2 - 4 * s + 1
        g01 = (-6 * s2 + 6 * s) / h
        g11 = 3 * s2 - 2 * s
        inside = (g00[..., None] * self.p[k] + g10[..., None] * self.d[k]
                  + g01[..., None] * self.p[k + 1] + g11[..., None] * self.d[k + 1])
        outside = (t < -1) | (t > 1)
        return np.where(outside[..., None], np.broadcast_to(self.b, inside.shape), inside)

    def acceleration(self, t):
        t, k, h, s = self._local(t)
        a00 = (12 * s - 6) / h ** 2
        a10 = (6 * s - 4) / h
        a01 = (-12 * s + 6) / h ** 2
        a11 = (6 * s - 2) / h
        inside = (a00[..., None] * self.p[k] + a10[..., None] * self.d[k]
                  + a01[..., None] * self.p[k + 1] + a11[..., None] * self.d[k + 1])
        outside = (t < -1) | (t > 1)
        return np.where(outside[..., None], 0.0, inside)


@dataclass
class LinkGeometry:
    strands: list
    flavor: str = LINK
    theta_cap: float = DEFAULT_THETA_CAP
    name: str = ""
    n: int = 3

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise GeometryError(f"unknown flavor {self.flavor!r}")
        if self.n != 3:
            raise GeometryError("numerics are implemented for n = 3 only")
        if not self.strands:
            raise GeometryError("a link needs at least one strand")

    @property
    def m(self) -> int:
        return len(self.strands)

    def eval(self, strand: int, t):
        """Point and unit tangent of strand ``strand`` (0-based) at ``t``."""
        if not 0 <= strand < self.m:
            raise GeometryError(f"no strand {strand}")
        s = self.strands[strand]
        v = s.velocity(t)
        norm = np.linalg.norm(v, axis=-1)
        if np.any(norm == 0):
            raise GeometryError("degenerate derivative")
        return s.position(t), v / norm[..., None]

    def validate(self, grid: int = 1000, window: float = 1.5) -> list[str]:
        problems = []
        ts = np.linspace(-window, window, grid)
        pts, tans = [], []
        for i in range(self.m):
            v = self.strands[i].velocity(ts)
            if np.any(np.linalg.norm(v, axis=-1) < 1e-12):
                problems.append(f"strand {i + 1}: degenerate derivative")
                continue
            p, u = self.eval(i, ts)
            pts.append(p)
            tans.append(u)
        if problems:
            return problems
        problems.extend(_embedding_problems(pts, ts))
        if self.flavor == BRAID:
            cos_cap = np.cos(self.theta_cap)
            for i, u in enumerate(tans):
                if np.any(u[:, 0] <= 0):
                    problems.append(f"strand {i + 1}: tangent first component not positive")
                if np.any(np.abs(u[:, 2]) >= cos_cap):
                    problems.append(f"strand {i + 1}: tangent enters a polar cap")
        return problems

    def require_valid(self, **kw) -> None:
        problems = self.validate(**kw)
        if problems:
            raise GeometryError("; ".join(problems))


def _embedding_problems(pts, ts, tol: float = 1e-6) -> list[str]:
    """Points of different strands, or far-apart points of one strand, must
    not come closer than the sampling resolution can resolve."""
    problems = []
    for i, p in enumerate(pts):
        seg = np.linalg.norm(np.diff(p, axis=0), axis=-1)
        h = seg.max()
        dist = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
        gap = np.abs(np.arange(len(p))[:, None] - np.arange(len(p))[None, :])
        # arc length between samples bounds how close a simple curve may return
        arc = np.abs(np.cumsum(np.r_[0, seg])[:, None] - np.cumsum(np.r_[0, seg])[None, :])
        close = (gap > 2) & (dist < tol + 0.5 * h) & (arc > 4 * h)
        if np.any(close):
            problems.append(f"strand {i + 1}: self-intersection near sample resolution")
        for j in range(i + 1, len(pts)):
            dmin = np.min(np.linalg.norm(p[:, None, :] - pts[j][None, :, :], axis=-1))
            if dmin < tol + 0.5 * max(h, np.linalg.norm(np.diff(pts[j], axis=0), axis=-1).max()):
                problems.append(f"strands {i + 1} and {j + 1} intersect near sample resolution")
    return problems


# ---------------------------------------------------------------------------
# compactification coordinates

@dataclass
class CompactificationCoords:
    """Directions ``v[i, j]`` and distance ratios ``a[i, j, k]`` (0-based)."""

    v: dict = field(default_factory=dict)
    a: dict = field(default_factory=dict)


def gamma_coords(points) -> CompactificationCoords:
    x = np.asarray(points, dtype=float)
    n = len(x)
    out = CompactificationCoords()
    dist = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    off = dist[~np.eye(n, dtype=bool)]
    if off.size and off.min() <= DISTINCT_TOL * max(1.0, dist.max()):
        raise GeometryError("coincident points")
    for i in range(n):
        for j in range(i + 1, n):
            out.v[i, j] = (x[j] - x[i]) / dist[i, j]
            for k in range(j + 1, n):
                out.a[i, j, k] = dist[i, j] / dist[i, k]
    return out


# ---------------------------------------------------------------------------
# sampling

@dataclass
class Configuration:
    """A batch of configurations.

    ``params[i]`` has shape (N, j_i), increasing along axis 1; ``free`` has
    shape (N, s, 3).
    """

    params: list
    free: np.ndarray


def strand_parameters(u, scale: float = 1.0):
    """Map uniform draws to ordered strand parameters.

    ``u`` has shape (N, j).  Each coordinate goes through the Cauchy map
    ``t = scale * tan(pi (u - 1/2))``; the tuple is then sorted.  Returns
    the sorted parameters and the log of the density of the sorted tuple.
    """
    u = np.asarray(u, dtype=float)
    j = u.shape[1]
    t = scale * np.tan(np.pi * (u - 0.5))
    logp = np.sum(-np.log(np.pi * scale) - np.log1p((t / scale) ** 2), axis=1)
    logp += np.sum(np.log(np.arange(1, j + 1)))
    return np.sort(t, axis=1), logp


def radial_points(u, center, scale: float = 1.0):
    """Points ``center + rho * w`` with ``rho = scale u0 / (1 - u0)`` and ``w``
    uniform on the sphere.  ``u`` has shape (N, 3).  Returns the points and
    the log density ``log(h(rho) / (4 pi rho^2))`` with
    ``h(rho) = scale / (scale + rho)^2``.
    """
    u = np.asarray(u, dtype=float)
    rho = scale * u[:, 0] / (1 - u[:, 0])
    z = 2 * u[:, 1] - 1
    phi = 2 * np.pi * u[:, 2]
    r = np.sqrt(np.maximum(0.0, 1 - z * z))
    w = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    pts = center + rho[:, None] * w
    return pts, radial_log_density(rho, scale)


def radial_log_density(rho, scale: float = 1.0):
    return np.log(scale) - 2 * np.log(scale + rho) - np.log(4 * np.pi) - 2 * np.log(rho)


def sample_configuration(shape, rng: np.random.Generator, n: int = 1,
                         param_scale: float = 1.0, free_scale: float = 1.0):
    """Draw ``n`` configurations of the given shape ``((j_1, ..., j_m), s)``.

    Returns the batch and the importance weights (reciprocal densities).
    Draws violating distinctness are redrawn.
    """
    counts, s = shape
    params, logp = [], np.zeros(n)
    for j in counts:
        if j == 0:
            params.append(np.zeros((n, 0)))
            continue
        t, lp = strand_parameters(rng.random((n, j)), param_scale)
        params.append(t)
        logp += lp
    free = np.zeros((n, s, 3))
    for k in range(s):
        pts, lp = radial_points(rng.random((n, 3)), np.zeros(3), free_scale)
        free[:, k] = pts
        logp += lp
    bad = _coincident(params, free)
    if np.any(bad):
        # measure zero in exact arithmetic; redraw the affected rows
        sub, w = sample_configuration(shape, rng, int(bad.sum()), param_scale, free_scale)
        for i, p in enumerate(sub.params):
            params[i][bad] = p
        free[bad] = sub.free
        logp[bad] = -np.log(w)
    return Configuration(params, free), np.exp(-logp)


def _coincident(params, free) -> np.ndarray:
    n = free.shape[0]
    bad = np.zeros(n, dtype=bool)
    for t in params:
        if t.shape[1] > 1:
            bad |= np.any(np.diff(t, axis=1) <= DISTINCT_TOL, axis=1)
    s = free.shape[1]
    for i in range(s):
        for j in range(i + 1, s):
            bad |= np.linalg.norm(free[:, i] - free[:, j], axis=-1) <= DISTINCT_TOL
    return bad


# ---------------------------------------------------------------------------
# file format

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_link(text: str) -> LinkGeometry:
    """Parse the link file format.

    Header ``n=3 m=<int> flavor=<link|braid> [theta_cap=<float>]``, then for
    every strand a line ``strand <k>`` followed by knot lines
    ``t x y z dx dy dz`` (parentheses and commas are ignored).  ``#`` starts
    a comment.
    """
    lines = text.splitlines()
    header = None
    strands: list[list[tuple[int, list[float]]]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            header = _parse_header(line, lineno)
            continue
        if line.startswith("strand"):
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) != len(strands) + 1:
                raise ParseError(f"expected 'strand {len(strands) + 1}'", lineno, 1)
            strands.append([])
            continue
        if not strands:
            raise ParseError("knot line before any 'strand' line", lineno, 1)
        cleaned = line.replace("(", " ").replace(")", " ").replace(",", " ")
        fields = cleaned.split()
        if len(fields) != 7:
            raise ParseError(f"expected 7 numbers, found {len(fields)}", lineno, 1)
        vals = []
        for f in fields:
            if not re.fullmatch(_NUM, f):
                raise ParseError(f"not a number: {f!r}", lineno, raw.find(f) + 1)
            vals.append(float(f))
        strands[-1].append((lineno, vals))
    if header is None:
        raise ParseError("empty link file", 1, 1)
    m, flavor, theta_cap = header
    if len(strands) != m:
        raise ParseError(f"header announces m={m} but {len(strands)} strands given", len(lines), 1)
    built = []
    for rows in strands:
        if len(rows) < 2:
            raise ParseError("a strand needs at least two knots", rows[0][0] if rows else 1, 1)
        arr = np.array([r[1] for r in rows])
        try:
            built.append(HermiteStrand(arr[:, 0], arr[:, 1:4], arr[:, 4:7]))
        except GeometryError as exc:
            raise ParseError(str(exc), rows[0][0], 1) from exc
    return LinkGeometry(built, flavor, theta_cap)


def _parse_header(line: str, lineno: int):
    fields = dict()
    for tok in line.split():
        if "=" not in tok:
            raise ParseError(f"bad header token {tok!r}", lineno, line.find(tok) + 1)
        k, v = tok.split("=", 1)
        fields[k] = v
    if fields.get("n") != "3":
        raise ParseError("header must declare n=3", lineno, 1)
    try:
        m = int(fields["m"])
    except (KeyError, ValueError):
        raise ParseError("header needs m=<int>", lineno, 1) from None
    flavor = fields.get("flavor", "")
    if flavor not in FLAVORS:
        raise ParseError("header needs flavor=link|braid", lineno, 1)
    theta_cap = float(fields.get("theta_cap", DEFAULT_THETA_CAP))
    return m, flavor, theta_cap


def format_link(link: LinkGeometry) -> str:
    head = f"n=3 m={link.m} flavor={link.flavor}"
    if link.theta_cap != DEFAULT_THETA_CAP:
        head += f" theta_cap={link.theta_cap!r}"
    out = [head]
    for i, s in enumerate(link.strands, start=1):
        if not isinstance(s, HermiteStrand):
            raise GeometryError("only Hermite strands can be written")
        out.append(f"strand {i}")
        for t, p, d in zip(s.t, s.p, s.d):
            out.append(" ".join(repr(float(x)) for x in (t, *p, *d)))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# bundled geometries

def strand_from_function(f, df, n_knots: int = 81) -> HermiteStrand:
    """Sample ``f`` and its derivative at equally spaced knots on [-1, 1]."""
    t = np.linspace(-1.0, 1.0, n_knots)
    return HermiteStrand(t, np.array([f(x) for x in t]), np.array([df(x) for x in t]))


def trivial_link(m: int, spacing: float = 1.0, flavor: str = LINK) -> LinkGeometry:
    strands = []
    for i in range(m):
        y = (i - (m - 1) / 2) * spacing
        strands.append(HermiteStrand([-1, 1], [[-1, y, 0], [1, y, 0]], [[1, 0, 0], [1, 0, 0]]))
    return LinkGeometry(strands, flavor, name=f"trivial-{m}")


def linked_pair(radius: float = 0.5, length: float = 2.0, n_knots: int = 81,
                wobble: float = 1.0) -> LinkGeometry:
    """Two strands winding once around each other, braid-compatible.

    Strand 1 is ``(L t, r cos th, r sin th)`` and strand 2 the same with
    ``th + pi``, where ``th = pi t + wobble sin(pi t)``; ``wobble = 1`` makes
    the twist start and end with zero angular speed, so the tails are
    exactly affine.  The linking number is +1.
    """
    if abs(wobble - 1.0) > 1e-12:
        raise GeometryError("wobble must be 1 for exact affine tails")

    def make(phase):
        def f(t):
            th = np.pi * t + wobble * np.sin(np.pi * t) + phase
            return np.array([length * t, radius * np.cos(th), radius * np.sin(th)])

        def df(t):
            th = np.pi * t + wobble * np.sin(np.pi * t) + phase
            dth = np.pi + wobble * np.pi * np.cos(np.pi * t)
            return np.array([length, -radius * np.sin(th) * dth, radius * np.cos(th) * dth])
        return strand_from_function(f, df, n_knots)

    s1, s2 = make(0.0), make(np.pi)
    _snap_tails(s1)
    _snap_tails(s2)
    return LinkGeometry([s1, s2], BRAID, name="linked-pair")


def _snap_tails(s: HermiteStrand) -> None:
    # remove rounding noise so the window ends sit exactly on the affine map
    s.d[0, 1:] = 0.0
    s.d[-1] = s.d[0]
    s.p[-1] = s.p[0] + 2 * s.d[0]
    s.b = s.d[0].copy()
    s.a = s.p[0] + s.b


def trefoil_curve(th):
    return np.array([np.sin(th) + 2 * np.sin(2 * th), np.cos(th) - 2 * np.cos(2 * th),
                     -np.sin(3 * th)])


def trefoil_derivative(th):
    return np.array([np.cos(th) + 4 * np.cos(2 * th), -np.sin(th) + 4 * np.sin(2 * th),
                     -3 * np.cos(3 * th)])


def torus_trefoil_curve(th):
    r = 2 + np.cos(3 * th)
    return np.array([r * np.cos(2 * th), r * np.sin(2 * th), np.sin(3 * th)])


def torus_trefoil_derivative(th):
    r = 2 + np.cos(3 * th)
    dr = -3 * np.sin(3 * th)
    return np.array([dr * np.cos(2 * th) - 2 * r * np.sin(2 * th),
                     dr * np.sin(2 * th) + 2 * r * np.cos(2 * th), 3 * np.cos(3 * th)])


def long_knot_from_closed(curve, derivative, cut: float, n_knots: int = 161,
                          reach: float = 4.0, scale: float = 1.0,
                          n_fine: int = 20001) -> LinkGeometry:
    """Open a closed curve at ``curve(cut)`` by inversion in that point.

    Inversion sends the cut point to infinity; the two ends become
    asymptotic to one line parallel to the tangent there.  The result is
    rotated so that line points along +x, rescaled, cut where the ends are
    ``reach`` away from the body and joined to exact affine tails.
    """
    P = curve(cut)
    u = derivative(cut)
    u = u / np.linalg.norm(u)
    # orthonormal frame with u first
    helper = np.eye(3)[np.argmin(np.abs(u))]
    e2 = np.cross(u, helper)
    e2 /= np.linalg.norm(e2)
    e3 = np.cross(u, e2)
    R = np.stack([u, e2, e3])

    def inverted(th):
        x = curve(th) - P
        return scale * R @ (x / np.dot(x, x))

    def inverted_d(th):
        x = curve(th) - P
        dx = derivative(th)
        r2 = np.dot(x, x)
        return scale * R @ (dx / r2 - 2 * np.dot(x, dx) * x / r2 ** 2)

    # the image runs from -inf (th just below cut + 2 pi) to +inf (just above
    # cut) as th decreases; find the parameter range inside |x_1| <= reach
    ths = np.linspace(cut + 2 * np.pi, cut, n_fine)[1:-1]
    xs = np.array([inverted(th) for th in ths])
    inside = np.abs(xs[:, 0]) <= reach
    idx = np.nonzero(inside)[0]
    lo, hi = idx[0], idx[-1]
    ths, xs = ths[lo:hi + 1], xs[lo:hi + 1]
    seg = np.linalg.norm(np.diff(xs, axis=0), axis=1)
    arc = np.r_[0.0, np.cumsum(seg)]
    total = arc[-1]
    # the tail line: average offset of the two window ends
    line = 0.5 * (xs[0, 1:] + xs[-1, 1:])
    x0, x1 = xs[0, 0], xs[-1, 0]
    speed = 0.5 * (x1 - x0)
    # sigma maps t in [-1, 1] onto arc length with sigma'(+-1) = speed
    gamma = 0.75 * (total - 2 * speed)
    if gamma < 0:
        raise GeometryError("body shorter than the window; increase reach")
    t = np.linspace(-1.0, 1.0, n_knots)
    sigma = speed * (t + 1) + gamma * ((t + 1) - ((t ** 3 + 1) / 3))
    dsigma = speed + gamma * (1 - t ** 2)
    th_knots = np.interp(sigma, arc, ths)
    pts, ders = [], []
    for th, ds in zip(th_knots, dsigma):
        d = -inverted_d(th)  # th decreases along the strand
        pts.append(inverted(th))
        ders.append(d / np.linalg.norm(d) * ds)
    pts, ders = np.array(pts), np.array(ders)
    # blend the ends onto the exact tail line
    w = np.clip((np.abs(t) - 0.8) / 0.2, 0.0, 1.0) ** 2
    target = np.column_stack([pts[:, 0], np.tile(line, (n_knots, 1))])
    pts = (1 - w)[:, None] * pts + w[:, None] * target
    ders = (1 - w)[:, None] * ders + w[:, None] * np.column_stack(
        [np.full(n_knots, speed), np.zeros((n_knots, 2))])
    pts[0] = [x0, *line]
    pts[-1] = [x0 + 2 * speed, *line]
    ders[0] = ders[-1] = [speed, 0.0, 0.0]
    return LinkGeometry([HermiteStrand(t, pts, ders)], LINK)


def long_trefoil(variant: int = 1, n_knots: int = 161) -> LinkGeometry:
    """Long trefoil on one strand; ``variant`` 1 and 2 are distinct curves."""
    if variant == 1:
        link = long_knot_from_closed(trefoil_curve, trefoil_derivative, np.pi,
                                     n_knots=n_knots, reach=3.0, scale=4.0)
    elif variant == 2:
        link = long_knot_from_closed(torus_trefoil_curve, torus_trefoil_derivative, 0.0,
                                     n_knots=n_knots, reach=3.0, scale=6.0)
    else:
        raise GeometryError("trefoil variants are 1 and 2")
    link.name = f"trefoil-{variant}"
    return link


def long_unknot(n_knots: int = 161) -> LinkGeometry:
    """A curved long unknot: an opened ellipse with a vertical bump."""
    def curve(th):
        return np.array([2 * np.cos(th), np.sin(th), 0.5 * np.sin(2 * th)])

    def derivative(th):
        return np.array([-2 * np.sin(th), np.cos(th), np.cos(2 * th)])
    link = long_knot_from_closed(curve, derivative, np.pi / 2, n_knots=n_knots,
                                 reach=3.0, scale=4.0)
    link.name = "unknot"
    return link


BUNDLED = {
    "trivial-1": lambda: trivial_link(1),
    "trivial-2": lambda: trivial_link(2),
    "trivial-3": lambda: trivial_link(3),
    "trivial-braid-2": lambda: trivial_link(2, flavor=BRAID),
    "linked-pair": linked_pair,
    "linked-pair-wide": lambda: linked_pair(radius=0.7, length=3.0, n_knots=61),
    "trefoil": lambda: long_trefoil(1),
    "trefoil-2": lambda: long_trefoil(2),
    "unknot": long_unknot,
}


def bundled(name: str) -> LinkGeometry:
    try:
        return BUNDLED[name]()
    except KeyError:
        raise GeometryError(f"unknown bundled geometry {name!r}; known: {sorted(BUNDLED)}") from None


# ---------------------------------------------------------------------------
# combinatorial oracles on projections

def polyline(link: LinkGeometry, strand: int, samples: int = 2000, window: float = 1.2):
    t = np.linspace(-window, window, samples)
    return link.strands[strand].position(t)


def signed_crossings(p: np.ndarray, q: np.ndarray, direction=(0.0, 0.0, 1.0), same: bool = False):
    """Crossings of the projections of polylines ``p`` and ``q`` along
    ``direction``.  Returns a list of (index in p, index in q, sign, p over q).
    ``sign`` is the usual right-handed crossing sign with p's segment first.
    """
    z = np.asarray(direction, dtype=float)
    z = z / np.linalg.norm(z)
    helper = np.eye(3)[np.argmin(np.abs(z))]
    x = np.cross(z, helper)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    P = np.stack([p @ x, p @ y], axis=1)
    Q = np.stack([q @ x, q @ y], axis=1)
    hp, hq = p @ z, q @ z
    a0, a1 = P[:-1], P[1:]
    b0, b1 = Q[:-1], Q[1:]
    da = a1 - a0
    db = b1 - b0
    out = []
    for i in range(len(a0)):
        r = b0 - a0[i]
        den = da[i, 0] * db[:, 1] - da[i, 1] * db[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (r[:, 0] * db[:, 1] - r[:, 1] * db[:, 0]) / den
            u = (r[:, 0] * da[i, 1] - r[:, 1] * da[i, 0]) / den
        hit = (den != 0) & (s >= 0) & (s < 1) & (u >= 0) & (u < 1)
        if same:
            hit &= np.abs(np.arange(len(b0)) - i) > 1
        for j in np.nonzero(hit)[0]:
            h1 = hp[i] + s[j] * (hp[i + 1] - hp[i])
            h2 = hq[j] + u[j] * (hq[j + 1] - hq[j])
            ta = p[i + 1] - p[i]
            tb = q[j + 1] - q[j]
            over = h1 > h2
            cr = np.dot(np.cross(ta, tb), z)
            sign = int(np.sign(cr)) if over else -int(np.sign(cr))
            out.append((i + s[j], j + u[j], sign, bool(over)))
    return out


def linking_number_oracle(link: LinkGeometry, a: int = 0, b: int = 1, samples: int = 3000,
                          direction=(0.0, 0.0, 1.0)) -> float:
    """Signed count of crossings where strand ``a`` passes over strand ``b``.

    For long links the strands are cut far out on their tails, where they
    are parallel and do not cross in a generic projection.
    """
    p = polyline(link, a, samples)
    q = polyline(link, b, samples)
    return float(sum(sgn for _, _, sgn, over in signed_crossings(p, q, direction) if over))


def writhe_oracle(link: LinkGeometry, strand: int = 0, samples: int = 3000,
                  direction=(0.0, 0.0, 1.0)) -> float:
    """Signed self-crossing count of one strand's projection."""
    p = polyline(link, strand, samples)
    # each self-crossing is found twice (as (i, j) and (j, i))
    return 0.5 * sum(sgn for _, _, sgn, _ in signed_crossings(p, p, direction, same=True))


def gauss_diagram_v2(link: LinkGeometry, strand: int = 0, samples: int = 3000,
                     direction=(0.0, 0.0, 1.0)) -> int:
    """Order-2 invariant of a long knot by counting Gauss-diagram arrows.

    With crossings met in order along the strand, count pairs of crossings
    i < j < k < l with arrows (i, k) and (j, l) where the first arrow goes
    from the under passage to the over passage and the second from the over
    to the under one, weighted by the product of the signs.
    """
    p = polyline(link, strand, samples)
    events = []
    for s_a, s_b, sgn, over in signed_crossings(p, p, direction, same=True):
        if s_a < s_b:
            events.append((s_a, s_b, sgn, over))
    total = 0
    for a in events:
        for b in events:
            i, k = a[0], a[1]
            j, l_ = b[0], b[1]
            if not (i < j < k < l_):
                continue
            # a: first passage under; b: first passage over
            if (not a[3]) and b[3]:
                total += a[2] * b[2]
    return total
