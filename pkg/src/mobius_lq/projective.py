"""Geometry of the SL(2, R) action on the projective line.

Points of the projective line are identified with angles in ``[0, pi)``
measured counterclockwise from the direction ``[1:0]``.  The metric is the
angle between lines, ``min(|a - b|, pi - |a - b|)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
import math

import numpy as np

PI = math.pi
ANGLE_TOL = 1e-9


def normalize_angle(theta):
    """Reduce angles mod pi into ``[0, pi)``; works on scalars and arrays."""
    out = np.mod(theta, PI)
    # np.mod can return exactly pi for tiny negative inputs
    out = np.where(out >= PI, 0.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def angle_dist(a, b):
    """Projective distance between angles (vectorized)."""
    d = np.abs(np.mod(np.asarray(a, dtype=float) - b, PI))
    d = np.minimum(d, PI - d)
    if np.ndim(d) == 0:
        return float(d)
    return d


@dataclass(frozen=True)
class ProjPoint:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", normalize_angle(float(self.angle)))

    @classmethod
    def from_vector(cls, x, y):
        return cls(math.atan2(float(y), float(x)))

    @classmethod
    def from_real(cls, x):
        """Point ``[x:1]`` of the affine chart; ``inf`` maps to ``[1:0]``."""
        if x is None or (isinstance(x, float) and math.isinf(x)):
            return cls(0.0)
        return cls(math.atan2(1.0, float(x)))

    @property
    def vector(self):
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    def to_real(self):
        """Affine chart coordinate ``x`` with ``[x:1]``; ``inf`` at angle 0."""
        s = math.sin(self.angle)
        if abs(s) < 1e-300:
            return math.inf
        return math.cos(self.angle) / s


def real_to_angle(x):
    """Vectorized affine chart -> angle (``[x:1]`` has angle ``atan2(1, x)``)."""
    return np.arctan2(1.0, np.asarray(x, dtype=float))


def angle_to_real(theta):
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        return np.cos(theta) / np.sin(theta)


def _as_entry(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, Rational)) and not isinstance(v, bool):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


@dataclass(frozen=True)
class Mat2:
    """2x2 matrix of determinant one.

    Entries are either all ``Fraction`` (exact, authoritative) or all
    ``float``.  ``Mat2.exact`` builds the exact form from ints, strings such
    as ``"1/2"`` or ``Fraction``; floats are kept as floats.
    """

    a: Fraction | float
    b: Fraction | float
    c: Fraction | float
    d: Fraction | float

    def __post_init__(self):
        entries = [_as_entry(v) for v in (self.a, self.b, self.c, self.d)]
        if not all(isinstance(v, Fraction) for v in entries):
            entries = [float(v) for v in entries]
        for name, v in zip("abcd", entries):
            object.__setattr__(self, name, v)
        det = self.det
        if self.is_exact:
            if det != 1:
                raise ValueError(f"determinant is {det}, expected exactly 1")
        else:
            scale = abs(self.a * self.d) + abs(self.b * self.c)
            if abs(det - 1.0) > 1e-12 * max(scale, 1.0):
                raise ValueError(f"determinant is {det!r}, expected 1")

    @classmethod
    def exact(cls, a, b, c, d):
        return cls(*(Fraction(v) if not isinstance(v, float) else Fraction(v)
                     for v in (a, b, c, d)))

    @classmethod
    def from_array(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def rotation(cls, phi):
        c, s = math.cos(phi), math.sin(phi)
        return cls(c, -s, s, c)

    @property
    def is_exact(self):
        return isinstance(self.a, Fraction)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def trace(self):
        return self.a + self.d

    @property
    def frobenius_sq(self):
        """Sum of squared entries, i.e. the trace of ``g^T g``."""
        return self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def array(self):
        return np.array([[float(self.a), float(self.b)],
                         [float(self.c), float(self.d)]])

    def to_float(self):
        return Mat2(float(self.a), float(self.b), float(self.c), float(self.d))

    def __matmul__(self, other):
        if not isinstance(other, Mat2):
            return NotImplemented
        if self.is_exact != other.is_exact:
            x, y = self.to_float(), other.to_float()
        else:
            x, y = self, other
        return Mat2(x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
                    x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d)

    def inverse(self):
        return Mat2(self.d, -self.b, -self.c, self.a)

    def norm(self):
        return math.sqrt(norm_sq_entries(*(float(v) for v in self.entries())))

    def __str__(self):
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


def norm_sq_from_frobenius(T):
    """Squared operator norm of an SL2 matrix from ``T = a^2+b^2+c^2+d^2``.

    The eigenvalues of ``g^T g`` are the roots of ``x^2 - T x + 1``.
    """
    T = np.asarray(T, dtype=float)
    disc = np.sqrt(np.maximum((T - 2.0) * (T + 2.0), 0.0))
    out = 0.5 * (T + disc)
    if out.ndim == 0:
        return float(out)
    return out


def norm_sq_entries(a, b, c, d):
    """Squared operator norm from the entries, without cancellation near rotations.

    For determinant one, ``T - 2 = (a-d)^2 + (b+c)^2`` and
    ``T + 2 = (a+d)^2 + (b-c)^2``.
    """
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    lo = (a - d) ** 2 + (b + c) ** 2
    hi = (a + d) ** 2 + (b - c) ** 2
    out = 0.5 * (0.5 * (lo + hi) + np.sqrt(lo * hi))
    if out.ndim == 0:
        return float(out)
    return out


def _as_array(g):
    if isinstance(g, Mat2):
        return g.array()
    return np.asarray(g, dtype=float)


def act(g, x):
    """Projective image ``[g v]`` of the point ``x = [v]``."""
    m = _as_array(g)
    v = x.vector if isinstance(x, ProjPoint) else np.array([math.cos(x), math.sin(x)])
    w = m @ v
    return ProjPoint.from_vector(w[0], w[1])


def act_angles(mats, angles):
    """Vectorized action.

    ``mats`` has shape ``(2, 2)`` or ``(K, 2, 2)``; ``angles`` broadcasts
    against the leading axis.  Returns angles in ``[0, pi)``.
    """
    mats = np.asarray(mats, dtype=float)
    angles = np.asarray(angles, dtype=float)
    c, s = np.cos(angles), np.sin(angles)
    x = mats[..., 0, 0] * c + mats[..., 0, 1] * s
    y = mats[..., 1, 0] * c + mats[..., 1, 1] * s
    return normalize_angle(np.arctan2(y, x))


def derivative_at(mats, angles):
    """Derivative of the action in the standard angle chart.

    For a unit vector ``v`` at angle ``theta`` the derivative is
    ``det(g) / |g v|^2`` and ``det(g) = 1``.
    """
    mats = np.asarray(mats, dtype=float)
    angles = np.asarray(angles, dtype=float)
    c, s = np.cos(angles), np.sin(angles)
    x = mats[..., 0, 0] * c + mats[..., 0, 1] * s
    y = mats[..., 1, 0] * c + mats[..., 1, 1] * s
    return 1.0 / (x * x + y * y)


def proj_metric(x, y):
    ax = x.angle if isinstance(x, ProjPoint) else x
    ay = y.angle if isinstance(y, ProjPoint) else y
    return angle_dist(ax, ay)


@dataclass(frozen=True)
class SingularData:
    lambda_plus: float
    u_plus: ProjPoint
    u_minus: ProjPoint
    v_plus: ProjPoint
    v_minus: ProjPoint
    degenerate: bool = False

    @property
    def lambda_minus(self):
        return 1.0 / self.lambda_plus


def singular_decompose(g, degenerate_tol=1e-14):
    """Singular values and singular directions of ``g``.

    ``u_plus`` is the most expanded input direction (top eigenvector of
    ``g^T g``) and ``v_plus = [g u_plus]``.  When ``g`` is numerically a
    rotation the directions are meaningless and ``degenerate`` is set.
    """
    m = _as_array(g)
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    gap = (a - d) ** 2 + (b + c) ** 2  # T - 2
    lam_sq = norm_sq_entries(a, b, c, d)
    # principal axis of the symmetric matrix [[p, r], [r, s]]
    pu, ru, su = a * a + c * c, a * b + c * d, b * b + d * d
    u_plus = ProjPoint(0.5 * math.atan2(2.0 * ru, pu - su))
    pv, rv, sv = a * a + b * b, a * c + b * d, c * c + d * d
    v_plus = ProjPoint(0.5 * math.atan2(2.0 * rv, pv - sv))
    return SingularData(
        lambda_plus=math.sqrt(lam_sq),
        u_plus=u_plus,
        u_minus=ProjPoint(u_plus.angle + PI / 2),
        v_plus=v_plus,
        v_minus=ProjPoint(v_plus.angle + PI / 2),
        degenerate=bool(gap < degenerate_tol),
    )


def action_derivative(g, theta):
    """Derivative of ``g`` read in the charts centred at ``u_plus``/``v_plus``.

    ``theta`` is the angle of the input point measured from ``u_plus``; the
    value is ``1 / (lam^2 cos^2 theta + lam^-2 sin^2 theta)``.
    """
    lam = g if isinstance(g, (int, float)) else singular_decompose(g).lambda_plus
    lam2 = lam * lam
    c, s = np.cos(theta), np.sin(theta)
    out = 1.0 / (lam2 * c * c + s * s / lam2)
    if np.ndim(out) == 0:
        return float(out)
    return out
