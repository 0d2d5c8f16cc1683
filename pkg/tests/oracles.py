"""Independent reference computations used by the tests.

Nothing here imports the package's relation or rank code: chord diagrams
are plain perfect matchings, ranks come from sympy, and crossing data
comes from straight-segment intersection of sampled polylines.
"""

from __future__ import annotations

import itertools

import numpy as np
import sympy


# ---------------------------------------------------------------------------
# chord diagrams on a line as matchings

def matchings(points):
    points = list(points)
    if not points:
        yield ()
        return
    a = points[0]
    for i in range(1, len(points)):
        b = points[i]
        rest = points[1:i] + points[i + 1:]
        for m in matchings(rest):
            yield ((a, b),) + m


def normalize(chords):
    """Relabel feet by rank, returning a sorted tuple of sorted pairs."""
    feet = sorted(x for c in chords for x in c)
    rank = {x: i for i, x in enumerate(feet)}
    return tuple(sorted(tuple(sorted((rank[a], rank[b]))) for a, b in chords))


def crosses(c1, c2):
    (a, b), (c, d) = sorted(c1), sorted(c2)
    return (a < c < b) != (a < d < b)


def knot_weight_dimension(k: int) -> int:
    """dim of (line chord diagrams of order k / 4T, 1T)^* by sympy rank.

    4T: for a diagram with k-1 chords, one of its chords (p, q) and a fixed
    foot x in any gap, the new chord (x, y) with y just before or after p
    or q gives  [y after p] - [y before p] + [y after q] - [y before q] = 0.
    1T: any diagram with a chord crossing no other chord.
    """
    basis = sorted({normalize(m) for m in matchings(range(2 * k))})
    index = {d: i for i, d in enumerate(basis)}
    rows = []
    for d in basis:
        if any(all(not crosses(c, e) for e in d if e != c) for c in d):
            row = [0] * len(basis)
            row[index[d]] = 1
            rows.append(row)
    if k >= 2:
        for small in sorted({normalize(m) for m in matchings(range(2 * k - 2))}):
            for p, q in small:
                for gap in range(2 * k - 1):
                    x = gap - 0.5
                    row = [0] * len(basis)
                    for end in (p, q):
                        for shift, sign in ((0.25, 1), (-0.25, -1)):
                            new = normalize(small + ((x, end + shift),))
                            row[index[new]] += sign
                    if any(row):
                        rows.append(row)
    if not rows:
        return len(basis)
    return len(basis) - sympy.Matrix(rows).rank()


# ---------------------------------------------------------------------------
# projections of sampled curves

def _frame(direction):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    a = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - d * (a @ d)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2, d


def crossings(p, q, direction, same=False):
    """All crossings between polylines p and q viewed from ``direction``.

    Returns tuples (i, s, j, u, sign, p_over) with segment indices i, j and
    fractions s, u along them.  The sign is that of the oriented crossing,
    computed from the over strand's tangent, the under strand's tangent and
    the viewing direction.
    """
    e1, e2, d = _frame(direction)
    P = np.stack([p @ e1, p @ e2], axis=1)
    Q = np.stack([q @ e1, q @ e2], axis=1)
    a0, r = P[:-1, None, :], (P[1:] - P[:-1])[:, None, :]
    b0, w2 = Q[None, :-1, :], (Q[1:] - Q[:-1])[None, :, :]
    den = r[..., 0] * w2[..., 1] - r[..., 1] * w2[..., 0]
    w = b0 - a0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (w[..., 0] * w2[..., 1] - w[..., 1] * w2[..., 0]) / den
        u = (w[..., 0] * r[..., 1] - w[..., 1] * r[..., 0]) / den
    hit = (den != 0) & (s >= 0) & (s < 1) & (u >= 0) & (u < 1)
    if same:
        i_idx, j_idx = np.indices(hit.shape)
        hit &= j_idx >= i_idx + 2
    out = []
    for i, j in zip(*np.nonzero(hit)):
        si, uj = s[i, j], u[i, j]
        hp = (p[i] + si * (p[i + 1] - p[i])) @ d
        hq = (q[j] + uj * (q[j + 1] - q[j])) @ d
        tp, tq = p[i + 1] - p[i], q[j + 1] - q[j]
        over, under = (tp, tq) if hp > hq else (tq, tp)
        sign = 1 if np.cross(over, under) @ d > 0 else -1
        out.append((int(i), float(si), int(j), float(uj), sign, bool(hp > hq)))
    return out


def linking_number(p, q, direction=(0.13, 0.27, 1.0)):
    """Sum of crossing signs where p passes over q (one half of the usual
    symmetric count, which is what open strands with parallel tails give)."""
    return sum(c[4] for c in crossings(p, q, direction) if c[5])


def writhe(p, direction=(0.13, 0.27, 1.0)):
    return sum(c[4] for c in crossings(p, p, direction, same=True))


def gauss_v2(p, direction=(0.13, 0.27, 1.0)):
    """Order-2 invariant of a long knot from its Gauss diagram: the signed
    count of crossing pairs whose arrows, in parameter order a < b < c < d,
    are a->c and b->d with the first arrow starting on the under strand
    and the second on the over strand."""
    events = []
    for i, s, j, u, sign, over in crossings(p, p, direction, same=True):
        t1, t2 = i + s, j + u
        # first passage, second passage, and which one is on top
        first_over = over if t1 < t2 else not over
        events.append((min(t1, t2), max(t1, t2), sign, first_over))
    total = 0
    for (a, c, s1, o1), (b, d, s2, o2) in itertools.permutations(events, 2):
        if a < b < c < d and not o1 and o2:
            total += s1 * s2
    return total


def polyline(strand, t_min=-1.3, t_max=1.3, n=1201):
    return strand.position(np.linspace(t_min, t_max, n))
