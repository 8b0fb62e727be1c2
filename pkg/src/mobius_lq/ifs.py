"""Mobius IFS model: matrix families, invariant domains, attractor covers.

A family is a tuple of determinant-one matrices with a non-degenerate
probability vector.  Uniform hyperbolicity is certified by exhibiting a
finite union of arcs ``U0`` of the projective line with ``A(closure U0)``
strictly inside ``U0`` for every map; the nested ``U`` and ``U1`` and an
empirical contraction constant are derived from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
import itertools
import math

import numpy as np

from .errors import NoDomainFoundError, NotInvariantError, BudgetExceededError
from .projective import (
    PI, ANGLE_TOL, Mat2, ProjPoint, act_angles, angle_dist, derivative_at,
    norm_sq_entries, normalize_angle, real_to_angle,
)


@dataclass(frozen=True)
class MobiusIFS:
    maps: tuple
    weights: tuple
    label: str = ""

    def __post_init__(self):
        maps = tuple(m if isinstance(m, Mat2) else Mat2(*np.ravel(m)) for m in self.maps)
        weights = tuple(self._coerce_weight(w) for w in self.weights)
        if len(maps) < 2:
            raise ValueError("a Mobius IFS needs at least two maps")
        if len(weights) != len(maps):
            raise ValueError("one weight per map is required")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be strictly positive")
        total = sum(weights)
        if all(isinstance(w, Fraction) for w in weights):
            if total != 1:
                raise ValueError(f"weights sum to {total}, expected exactly 1")
        elif abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {float(total)!r}, expected 1")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "weights", weights)

    @staticmethod
    def _coerce_weight(w):
        if isinstance(w, (Fraction, int, str)):
            return Fraction(w)
        return float(w)

    def __len__(self):
        return len(self.maps)

    @property
    def is_exact(self):
        return all(m.is_exact for m in self.maps) and all(
            isinstance(w, Fraction) for w in self.weights)

    @cached_property
    def arrays(self):
        """Float shadow of the maps, shape ``(k, 2, 2)``."""
        return np.array([m.array() for m in self.maps])

    @cached_property
    def float_weights(self):
        return np.array([float(w) for w in self.weights])

    def with_weights(self, weights, label=None):
        return MobiusIFS(self.maps, tuple(weights), self.label if label is None else label)


# --------------------------------------------------------------------------
# arcs on R / pi Z

def _merge_arcs(arcs):
    """Merge ``(start, length)`` arcs; touching arcs are merged too.

    Returns ``(merged, full)`` where ``full`` means the circle is covered.
    """
    if not arcs:
        return (), False
    segs = sorted((normalize_angle(s), float(l)) for s, l in arcs if l > 0)
    if not segs:
        return (), False
    if any(l >= PI for _, l in segs):
        return (), True
    merged = []
    cs, ce = segs[0][0], segs[0][0] + segs[0][1]
    for s, l in segs[1:]:
        if s <= ce:
            ce = max(ce, s + l)
        else:
            merged.append([cs, ce])
            cs, ce = s, s + l
    merged.append([cs, ce])
    # wrap-around: the last arc may run past pi into the first ones
    while len(merged) > 1 and merged[-1][1] >= merged[0][0] + PI:
        first = merged.pop(0)
        merged[-1][1] = max(merged[-1][1], first[1] + PI)
    if merged[-1][1] - merged[-1][0] >= PI or (
            len(merged) == 1 and merged[0][1] - merged[0][0] >= PI):
        return (), True
    out = tuple((normalize_angle(s), e - s) for s, e in merged)
    return tuple(sorted(out)), False


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of pairwise disjoint arcs ``[start, start + length)``.

    Arcs with touching closures are merged on construction, so components
    always have disjoint closures.  The full circle is not representable.
    """

    arcs: tuple = ()

    def __post_init__(self):
        merged, full = _merge_arcs(list(self.arcs))
        if full:
            raise ValueError("interval set covers the whole projective line")
        object.__setattr__(self, "arcs", merged)

    @classmethod
    def try_from_arcs(cls, arcs):
        """Like the constructor but returns ``None`` for the full circle."""
        merged, full = _merge_arcs(list(arcs))
        return None if full else cls(merged)

    @classmethod
    def from_angle_interval(cls, lo, hi):
        """Arc running counterclockwise from ``lo`` to ``hi``."""
        return cls(((lo, (hi - lo) % PI),))

    @classmethod
    def from_real_interval(cls, lo, hi):
        """Image of the affine-chart interval ``[lo, hi]`` (``[x:1]``).

        The chart reverses orientation, so the arc runs from the angle of
        ``hi`` to the angle of ``lo``.
        """
        a_hi, a_lo = float(real_to_angle(float(hi))), float(real_to_angle(float(lo)))
        return cls(((a_hi, (a_lo - a_hi) % PI),))

    def __iter__(self):
        return iter(self.arcs)

    def __len__(self):
        return len(self.arcs)

    @property
    def total_length(self):
        return sum(l for _, l in self.arcs)

    def union(self, other):
        return IntervalSet(self.arcs + other.arcs)

    def fatten(self, eps):
        return IntervalSet.try_from_arcs([(s - eps, l + 2 * eps) for s, l in self.arcs])

    def shrink(self, eps):
        return IntervalSet(tuple((s + eps, l - 2 * eps) for s, l in self.arcs if l > 2 * eps))

    def image(self, g):
        """Image of the closure under a matrix; orientation is preserved."""
        m = g.array() if isinstance(g, Mat2) else np.asarray(g, dtype=float)
        arcs = []
        for s, l in self.arcs:
            a0 = float(act_angles(m, s))
            a1 = float(act_angles(m, s + l))
            arcs.append((a0, (a1 - a0) % PI))
        return IntervalSet.try_from_arcs(arcs)

    def arc_clearance(self, start, length):
        """Clearance of the arc inside this set, or ``-inf`` if not contained."""
        best = -math.inf
        for c, m in self.arcs:
            o = (start - c) % PI
            if o + length <= m:
                best = max(best, min(o, m - o - length))
        return best

    def clearance_of(self, other):
        """Minimal clearance of every arc of ``other`` inside ``self``."""
        if not other.arcs:
            return math.inf
        return min(self.arc_clearance(s, l) for s, l in other.arcs)

    def contains_angle(self, theta, tol=0.0):
        theta = float(theta)
        for c, m in self.arcs:
            o = (theta - c) % PI
            if o <= m + tol or o >= PI - tol:
                return True
        return False

    def grid(self, points_per_arc):
        """Evenly spaced points of the closure, endpoints included."""
        pts = [np.linspace(s, s + l, points_per_arc) for s, l in self.arcs]
        return normalize_angle(np.concatenate(pts)) if pts else np.empty(0)

    def as_real_intervals(self):
        """Arcs read in the affine chart as ``(lo, hi)``; may contain inf."""
        out = []
        for s, l in self.arcs:
            hi = math.inf if s == 0 else math.cos(s) / math.sin(s)
            e = normalize_angle(s + l)
            lo = math.inf if e == 0 else math.cos(e) / math.sin(e)
            out.append((lo, hi))
        return out


@dataclass(frozen=True)
class HyperbolicityCertificate:
    U: IntervalSet
    U1: IntervalSet
    U0: IntervalSet
    margin: float
    contraction_constant_C1: float
    c1_depth: int = 1


@dataclass(frozen=True)
class FixedPoint:
    map_index: int
    real: object  # Fraction, float or math.inf
    angle: float
    attracting: bool


@dataclass(frozen=True)
class SharedFixedPoint:
    pair: tuple
    real: object
    angle: float
    in_attractor: bool


@dataclass(frozen=True)
class FixedPointReport:
    fixed_points: tuple
    shared: tuple

    def by_map(self, i):
        return [fp for fp in self.fixed_points if fp.map_index == i]


# --------------------------------------------------------------------------
# word products in floating point (used by the geometry routines)

def float_products(arrays, depth):
    """All products of length ``depth`` in lexicographic word order."""
    k = len(arrays)
    prods = np.eye(2)[None]
    for _ in range(depth):
        prods = np.einsum("wij,kjl->wkil", prods, arrays).reshape(-1, 2, 2)
    return prods if depth > 0 else np.eye(2)[None]


def _products_upto(arrays, depth):
    out = []
    prods = np.eye(2)[None]
    for _ in range(depth):
        prods = np.einsum("wij,kjl->wkil", prods, arrays).reshape(-1, 2, 2)
        out.append(prods)
    return np.concatenate(out) if out else np.empty((0, 2, 2))


def _norm_sq_array(mats):
    return norm_sq_entries(mats[..., 0, 0], mats[..., 0, 1], mats[..., 1, 0], mats[..., 1, 1])


def _estimate_C1(ifs, U, depth, grid, pair_grid):
    mats = _products_upto(ifs.arrays, depth)
    nsq = _norm_sq_array(mats)
    pts = U.grid(grid)
    # infinitesimal ratios: derivative times |g|^2
    der = derivative_at(mats[:, None], pts[None, :]) * nsq[:, None]
    hi, lo = der.max(), der.min()
    sub = U.grid(pair_grid)
    i, j = np.triu_indices(len(sub), 1)
    dxy = angle_dist(sub[i], sub[j])
    keep = dxy > 1e-12
    i, j, dxy = i[keep], j[keep], dxy[keep]
    if len(dxy):
        for chunk in np.array_split(np.arange(len(mats)), max(1, len(mats) // 64)):
            img = act_angles(mats[chunk][:, None], sub[None, :])
            ratio = angle_dist(img[:, i], img[:, j]) * nsq[chunk][:, None] / dxy[None, :]
            hi, lo = max(hi, ratio.max()), min(lo, ratio.min())
    return max(hi, 1.0 / lo)


def _image_witness(U0, image):
    for s, l in image.arcs:
        for t in (s, s + l, s + l / 2):
            if not U0.contains_angle(t):
                return normalize_angle(t)
    return image.arcs[0][0] if image.arcs else 0.0


def verify_invariant_domain(ifs, U0_candidate, *, c1_depth=6, grid=256, pair_grid=32):
    """Certify ``closure(A U0) subset U0`` for every map and build the nest.

    ``U1`` and ``U`` are ``U0`` shrunk by one and two thirds of the raw
    clearance; ``margin`` is the resulting clearance of every inclusion.
    ``C1`` is the worst two-sided distortion ratio
    ``d(gx, gy) |g|^2 / d(x, y)`` over ``x, y`` on a grid of ``U`` and all
    words up to ``c1_depth``.
    """
    U0 = U0_candidate
    raw = math.inf
    for idx, m in enumerate(ifs.arrays):
        img = U0.image(m)
        if img is None:
            raise NotInvariantError(idx, 0.0)
        c = U0.clearance_of(img)
        if not c > 0:
            raise NotInvariantError(idx, _image_witness(U0, img))
        raw = min(raw, c)
    margin = raw / 3.0
    U1 = U0.shrink(margin)
    U = U0.shrink(2 * margin)
    C1 = _estimate_C1(ifs, U, c1_depth, grid, pair_grid)
    return HyperbolicityCertificate(U=U, U1=U1, U0=U0, margin=margin,
                                    contraction_constant_C1=float(C1), c1_depth=c1_depth)


def _attracting_direction(m):
    """Attracting fixed direction of a hyperbolic matrix, else ``None``."""
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    tr = a + d
    if abs(tr) <= 2.0 + 1e-12:
        return None
    lam = 0.5 * (tr + math.copysign(math.sqrt(tr * tr - 4.0), tr))
    v1 = np.array([b, lam - a])
    v2 = np.array([lam - d, c])
    v = v1 if np.hypot(*v1) >= np.hypot(*v2) else v2
    return normalize_angle(math.atan2(v[1], v[0]))


def _hull(V):
    """Single arc covering ``V``: the complement of its widest gap."""
    arcs = V.arcs
    if len(arcs) < 2:
        return V
    ends = [(s + l) for s, l in arcs]
    gaps = [((arcs[(i + 1) % len(arcs)][0] - ends[i]) % PI, i) for i in range(len(arcs))]
    _, i = max(gaps)
    start = arcs[(i + 1) % len(arcs)][0]
    return IntervalSet.try_from_arcs([(start, (ends[i] - start) % PI)])


def _prefer_hull(ifs, V, cert, verify_kw):
    H = _hull(V)
    if H is None or H == V:
        return cert
    try:
        return verify_invariant_domain(ifs, H, **verify_kw)
    except NotInvariantError:
        return cert


def find_invariant_domain(ifs, max_iters=200, eps=0.01, seed_depth=3, **verify_kw):
    """Search for an invariant domain by fattened forward iteration.

    Seeds are ``eps``-balls around attracting fixed directions of words of
    length up to ``seed_depth``; the set grows by the ``eps``-fattened image
    of the generators until it is mapped strictly inside itself.  If the
    single arc spanning the result is invariant too, that arc is returned.
    """
    seeds = []
    for m in _products_upto(ifs.arrays, seed_depth):
        t = _attracting_direction(m)
        if t is not None:
            seeds.append((t - eps, 2 * eps))
    if not seeds:
        raise NoDomainFoundError("no hyperbolic word to seed the search")
    V = IntervalSet.try_from_arcs(seeds)
    for _ in range(max_iters):
        if V is None or V.total_length > PI - 2 * eps:
            break
        images = [V.image(m) for m in ifs.arrays]
        if any(img is None for img in images):
            break
        if all(V.clearance_of(img) > 0 for img in images):
            try:
                cert = verify_invariant_domain(ifs, V, **verify_kw)
            except NotInvariantError:
                cert = None
            if cert is not None:
                return _prefer_hull(ifs, V, cert, verify_kw)
        grown = V
        for img in images:
            fat = img.fatten(eps)
            if fat is None:
                grown = None
                break
            grown = IntervalSet.try_from_arcs(grown.arcs + fat.arcs)
            if grown is None:
                break
        V = grown
    raise NoDomainFoundError(
        f"no invariant domain after {max_iters} iterations "
        f"(family {ifs.label or '<unnamed>'} may not be uniformly hyperbolic)")


@lru_cache(maxsize=32)
def certify(ifs):
    """Cached ``find_invariant_domain`` with default settings."""
    return find_invariant_domain(ifs)


def attractor_pieces(ifs, cert, depth, budget=2_000_000):
    """Arcs ``A_i(closure U)`` for all words ``i`` of length ``depth``."""
    k = len(ifs)
    count = k ** depth * len(cert.U)
    if count > budget:
        raise BudgetExceededError("attractor_cover", count, budget)
    mats = float_products(ifs.arrays, depth)
    starts = np.array([s for s, _ in cert.U.arcs])
    ends = starts + np.array([l for _, l in cert.U.arcs])
    a0 = act_angles(mats[:, None], starts[None, :])
    a1 = act_angles(mats[:, None], ends[None, :])
    lengths = np.mod(a1 - a0, PI)
    return list(zip(a0.ravel().tolist(), lengths.ravel().tolist()))


def attractor_cover(ifs, cert, depth, budget=2_000_000):
    """Union of the depth-``n`` images of ``closure U``; contains the attractor."""
    if depth == 0:
        return cert.U
    return IntervalSet(tuple(attractor_pieces(ifs, cert, depth, budget)))


def _fixed_points_of(m, i):
    a, b, c, d = m.entries()
    out = []
    if c == 0:
        out.append(math.inf)
        if d != a:
            out.append(b / (d - a))
    else:
        disc = (d - a) ** 2 + 4 * b * c
        if disc >= 0:
            if isinstance(disc, Fraction):
                rn, rd = math.isqrt(disc.numerator), math.isqrt(disc.denominator)
                root = Fraction(rn, rd) if rn * rn == disc.numerator and rd * rd == disc.denominator else math.sqrt(disc)
            else:
                root = math.sqrt(disc)
            for sgn in (-1, 1):
                x = (a - d + sgn * root) / (2 * c)
                if isinstance(x, float) or not isinstance(root, Fraction):
                    x = float(x)
                if all(x != y for y in out):
                    out.append(x)
    arr = m.array()
    pts = []
    for x in out:
        ang = 0.0 if x == math.inf else float(real_to_angle(float(x)))
        der = float(derivative_at(arr, ang))
        pts.append(FixedPoint(i, x, ang, der < 1.0 - 1e-12))
    return pts


def shared_fixed_points(ifs, tol=ANGLE_TOL):
    """Fixed points of each map and the pairs of maps sharing one.

    A shared point is flagged as lying in the attractor when it is the
    attracting fixed point of one of the two maps (attracting fixed points
    of generators always belong to the attractor; repelling ones never do).
    """
    fps = []
    for i, m in enumerate(ifs.maps):
        fps.extend(_fixed_points_of(m, i))
    shared = []
    for (i, j) in itertools.combinations(range(len(ifs)), 2):
        for p in (f for f in fps if f.map_index == i):
            for q in (f for f in fps if f.map_index == j):
                if angle_dist(p.angle, q.angle) < tol:
                    shared.append(SharedFixedPoint((i, j), p.real, p.angle,
                                                   p.attracting or q.attracting))
    return FixedPointReport(tuple(fps), tuple(shared))


# --------------------------------------------------------------------------
# presets and text format

def solomyak(t=9, p0=Fraction(49, 100)):
    """The family ``{A, B, C_t}``; ``A`` and ``B`` share the fixed point 0."""
    t = Fraction(t) if not isinstance(t, float) else t
    p0 = Fraction(p0) if not isinstance(p0, float) else p0
    half = Fraction(1, 2)
    A = Mat2(half, 0, 2, 2)
    B = Mat2(half, 0, 0, 2)
    C = Mat2(half, t, 0, 2)
    return MobiusIFS((A, B, C), (p0, p0, 1 - 2 * p0), label=f"solomyak(t={t}, p0={p0})")


def ssc4():
    """Two maps acting as ``x/4`` and ``x/4 + 1/2``; strong separation."""
    half = Fraction(1, 2)
    return MobiusIFS((Mat2(half, 0, 0, 2), Mat2(half, 1, 0, 2)), (half, half), label="ssc4")


def diag(*lambdas, weights=None):
    """Commuting family ``diag(1/lam, lam)``; ``[0:1]`` attracts every map."""
    maps = []
    for lam in lambdas:
        lam = Fraction(lam) if not isinstance(lam, float) else lam
        maps.append(Mat2(1 / lam, 0, 0, lam))
    if weights is None:
        weights = [Fraction(1, len(maps))] * len(maps)
    return MobiusIFS(tuple(maps), tuple(weights),
                     label="diag(" + ",".join(str(l) for l in lambdas) + ")")


PRESETS = {"solomyak": solomyak, "ssc4": ssc4, "diag": diag}


def _parse_number(text):
    try:
        return Fraction(text)
    except ValueError:
        return float(text)


def parse_preset(spec):
    """``preset:<name>(:key=value)*``, e.g. ``preset:solomyak:t=9:p0=0.49``.

    List values use commas: ``preset:diag:lambdas=2,4:weights=1/2,1/2``.
    """
    parts = spec.split(":")
    if parts[0] != "preset" or len(parts) < 2:
        raise ValueError(f"not a preset spec: {spec!r}")
    name = parts[1]
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kwargs = {}
    for kv in parts[2:]:
        if "=" not in kv:
            raise ValueError(f"preset parameter {kv!r} must look like key=value")
        k, v = kv.split("=", 1)
        vals = [_parse_number(x) for x in v.split(",")]
        kwargs[k] = vals if len(vals) > 1 or k in ("lambdas", "weights") else vals[0]
    if name == "diag":
        lambdas = kwargs.pop("lambdas", [2, 4])
        return diag(*lambdas, **kwargs)
    return PRESETS[name](**kwargs)


def parse_ifs_text(text, label=""):
    """Parse the line format: ``a b c d`` per map, then ``weights: ...``."""
    maps, weights = [], None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("label:"):
            label = line.split(":", 1)[1].strip()
            continue
        if line.lower().startswith("weights:"):
            weights = [_parse_number(x) for x in line.split(":", 1)[1].split()]
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ValueError(f"matrix line needs four entries: {raw!r}")
        maps.append(Mat2(*(_parse_number(x) for x in fields)))
    if weights is None:
        raise ValueError("missing 'weights:' line")
    return MobiusIFS(tuple(maps), tuple(weights), label=label)


def _fmt_number(x):
    if isinstance(x, Fraction):
        return str(x)
    return f"{x:.17g}"


def format_ifs_text(ifs):
    lines = []
    if ifs.label:
        lines.append(f"label: {ifs.label}")
    for m in ifs.maps:
        lines.append(" ".join(_fmt_number(v) for v in m.entries()))
    lines.append("weights: " + " ".join(_fmt_number(w) for w in ifs.weights))
    return "\n".join(lines) + "\n"


def load_ifs(spec):
    """Resolve a preset string or a path to an IFS text file."""
    if spec.startswith("preset:"):
        return parse_preset(spec)
    with open(spec, encoding="utf-8") as fh:
        return parse_ifs_text(fh.read(), label=spec)
