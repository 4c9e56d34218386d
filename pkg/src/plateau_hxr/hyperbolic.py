"""Models of the hyperbolic plane and isometries of H^2 x R.

Three charts are used for the base:

* the upper half-plane ``z = x + iy`` (y > 0);
* polar coordinates ``(rho, theta)`` about the point ``i``;
* the Poincare disk, reached from the half-plane by ``w = (i - z)/(i + z)``.

With this disk map the boundary point ``x = 0`` sits at ``theta = 0``,
``x = inf`` at ``theta = pi`` and in general ``theta = 2*arctan(x)``.

Isometries of the base are stored as 2x2 real matrices of determinant one
acting by Moebius maps on the half-plane; the R factor only translates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HalfPlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)) or self.y <= 0:
            raise DomainError("half-plane point needs finite x and y > 0")


@dataclass(frozen=True)
class PolarPoint:
    rho: float
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.rho) or self.rho < 0:
            raise DomainError("polar radius must be finite and non-negative")
        object.__setattr__(self, "theta", math.fmod(self.theta, TWO_PI) % TWO_PI)


@dataclass(frozen=True)
class ProductPoint:
    base: HalfPlanePoint | PolarPoint
    z: float


# -- vectorised chart maps --------------------------------------------------

def polar_from_halfplane(x, y):
    """(rho, theta) of half-plane points, stable far from i."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    s = np.hypot(x, y - 1.0) / (2.0 * np.sqrt(y))
    rho = 2.0 * np.arcsinh(s)
    theta = np.mod(np.arctan2(2.0 * x, (1.0 - x) * (1.0 + x) - y * y), TWO_PI)
    return rho, theta


def halfplane_from_polar(rho, theta):
    """Half-plane point at distance rho from i in disk direction theta."""
    rho = np.asarray(rho, float)
    theta = np.asarray(theta, float)
    z0 = 1j * np.exp(-rho)
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    z = (c * z0 + s) / (-s * z0 + c)
    return z.real, z.imag


def gans_from_polar(rho, theta):
    """Chart X = sinh(rho) (cos theta, sin theta) used by the mesh solver."""
    r = np.sinh(np.asarray(rho, float))
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def polar_from_gans(X):
    X = np.asarray(X, float)
    r = np.hypot(X[..., 0], X[..., 1])
    return np.arcsinh(r), np.mod(np.arctan2(X[..., 1], X[..., 0]), TWO_PI)


def gans_from_halfplane(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    s = np.hypot(x, y - 1.0) / (2.0 * np.sqrt(y))
    sinh_rho = 2.0 * s * np.sqrt(1.0 + s * s)
    theta = np.arctan2(2.0 * x, (1.0 - x) * (1.0 + x) - y * y)
    return np.stack([sinh_rho * np.cos(theta), sinh_rho * np.sin(theta)], axis=-1)


def halfplane_from_gans(X):
    rho, theta = polar_from_gans(X)
    return halfplane_from_polar(rho, theta)


def boundary_theta_from_x(x):
    """Disk angle of a boundary point of the half-plane (x may be inf)."""
    x = np.asarray(x, float)
    return np.mod(2.0 * np.arctan(x), TWO_PI)


def boundary_x_from_theta(theta):
    """Half-plane boundary coordinate; theta = pi maps to inf."""
    theta = np.asarray(theta, float)
    c = np.cos(theta / 2.0)
    with np.errstate(divide="ignore"):
        return np.where(np.abs(c) < 1e-300, np.inf, np.sin(theta / 2.0) / c)


def convert(point, model: str):
    """Convert a base point (or product point) to 'halfplane', 'polar' or 'disk'.

    The disk model is returned as a complex number.
    """
    if isinstance(point, ProductPoint):
        return ProductPoint(convert(point.base, model), point.z)
    if isinstance(point, complex):
        r = abs(point)
        if r >= 1.0:
            raise DomainError("disk point must lie in the open unit disk")
        point = PolarPoint(2.0 * math.atanh(r), math.atan2(point.imag, point.real))
    if isinstance(point, HalfPlanePoint):
        rho, theta = polar_from_halfplane(point.x, point.y)
        pol = PolarPoint(float(rho), float(theta))
        hp = point
    elif isinstance(point, PolarPoint):
        pol = point
        x, y = halfplane_from_polar(point.rho, point.theta)
        hp = HalfPlanePoint(float(x), float(y))
    else:
        raise ValidationError(f"unsupported point type {type(point).__name__}")
    if model == "halfplane":
        return hp
    if model == "polar":
        return pol
    if model == "disk":
        return complex(math.tanh(pol.rho / 2.0) * math.cos(pol.theta),
                       math.tanh(pol.rho / 2.0) * math.sin(pol.theta))
    raise ValidationError(f"unknown model {model!r}")


# -- distances --------------------------------------------------------------

def halfplane_distance(x1, y1, x2, y2):
    return 2.0 * np.arcsinh(np.sqrt(((x1 - x2) ** 2 + (y1 - y2) ** 2) / (4.0 * y1 * y2)))


def polar_distance(rho1, theta1, rho2, theta2):
    """Distance in polar coordinates without cancellation for nearby points."""
    a = np.sinh(0.5 * (np.asarray(rho1) - rho2)) ** 2
    b = np.sinh(rho1) * np.sinh(rho2) * np.sin(0.5 * (np.asarray(theta1) - theta2)) ** 2
    return 2.0 * np.arcsinh(np.sqrt(a + b))


def gans_distance(X1, X2):
    r1, t1 = polar_from_gans(X1)
    r2, t2 = polar_from_gans(X2)
    return polar_distance(r1, t1, r2, t2)


def base_distance(p, q) -> float:
    hp = convert(p, "halfplane")
    hq = convert(q, "halfplane")
    return float(halfplane_distance(hp.x, hp.y, hq.x, hq.y))


def distance(p, q) -> float:
    """Product-metric distance; accepts base points or product points."""
    if isinstance(p, ProductPoint) or isinstance(q, ProductPoint):
        zp = p.z if isinstance(p, ProductPoint) else 0.0
        zq = q.z if isinstance(q, ProductPoint) else 0.0
        bp = p.base if isinstance(p, ProductPoint) else p
        bq = q.base if isinstance(q, ProductPoint) else q
        return math.hypot(base_distance(bp, bq), zp - zq)
    return base_distance(p, q)


def disk_area(rho: float) -> float:
    """Area of the hyperbolic disk of radius rho: 2*pi*(cosh rho - 1)."""
    if not rho >= 0:
        raise DomainError("disk radius must be non-negative")
    return 4.0 * math.pi * math.sinh(rho / 2.0) ** 2


# -- isometries -------------------------------------------------------------

def _sl2(m) -> np.ndarray:
    m = np.asarray(m, float)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if not det > 0:
        raise ValidationError("Moebius matrix must have positive determinant")
    return m / math.sqrt(det)


def _to_zero_inf(a: float, b: float) -> np.ndarray:
    """Matrix sending boundary angles a -> 0 and b -> inf (half-plane)."""
    xa = float(boundary_x_from_theta(a))
    xb = float(boundary_x_from_theta(b))
    if math.isinf(xa) and math.isinf(xb):
        raise ValidationError("geodesic endpoints must differ")
    if math.isinf(xb):
        return _sl2([[1.0, -xa], [0.0, 1.0]])
    if math.isinf(xa):
        return _sl2([[0.0, -1.0], [1.0, -xb]])
    if xa == xb:
        raise ValidationError("geodesic endpoints must differ")
    if xb > xa:
        return _sl2([[1.0, -xa], [-1.0, xb]])
    return _sl2([[-1.0, xa], [1.0, -xb]])


@dataclass(frozen=True)
class Isometry:
    """Isometry of H^2 x R: a Moebius matrix on the base plus a z-shift."""

    kind: str
    params: tuple
    matrix: np.ndarray = field(repr=False, compare=False)
    dz: float = 0.0

    # constructors follow the four kinds used in the constructions
    @classmethod
    def dilation(cls, t: float, axis=(0.0, math.pi)) -> "Isometry":
        """Hyperbolic translation along the geodesic with the given endpoints.

        For t > 1 points move toward ``axis[1]``; in the half-plane with axis
        (0, pi) this is z -> t z.
        """
        if not t > 0:
            raise DomainError("dilation factor must be positive")
        a = _to_zero_inf(*axis)
        d = np.diag([math.sqrt(t), 1.0 / math.sqrt(t)])
        m = np.linalg.solve(a, d @ a)
        return cls("HyperbolicDilation", (float(t), tuple(map(float, axis))), _sl2(m), 0.0)

    @classmethod
    def vertical_translation(cls, dz: float) -> "Isometry":
        return cls("VerticalTranslation", (float(dz),), np.eye(2), float(dz))

    @classmethod
    def rotation(cls, dtheta: float) -> "Isometry":
        c, s = math.cos(dtheta / 2.0), math.sin(dtheta / 2.0)
        return cls("Rotation", (float(dtheta),), np.array([[c, s], [-s, c]]), 0.0)

    @classmethod
    def parabolic_normalization(cls, x0: float, y0: float, z0: float = 0.0) -> "Isometry":
        """(x, y, z) -> ((x - x0)/y0, y/y0, z - z0)."""
        if not y0 > 0:
            raise DomainError("normalisation height must be positive")
        return cls("ParabolicNormalization", (float(x0), float(y0), float(z0)),
                   _sl2([[1.0, -x0], [0.0, y0]]), -float(z0))

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other."""
        return Isometry("Composite", (self, other), _sl2(self.matrix @ other.matrix), self.dz + other.dz)

    def inverse(self) -> "Isometry":
        m = self.matrix
        inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
        return Isometry("Inverse", (self,), inv, -self.dz)

    # -- actions ----------------------------------------------------------
    def on_halfplane(self, x, y):
        (a, b), (c, d) = self.matrix
        z = np.asarray(x, float) + 1j * np.asarray(y, float)
        w = (a * z + b) / (c * z + d)
        return w.real, np.maximum(w.imag, np.finfo(float).tiny)

    def on_polar(self, rho, theta):
        x, y = halfplane_from_polar(rho, theta)
        return polar_from_halfplane(*self.on_halfplane(x, y))

    def on_gans(self, X):
        """Apply to chart coordinates X (shape (..., 2) or (..., 3) with z)."""
        X = np.asarray(X, float)
        rho, theta = polar_from_gans(X[..., :2])
        r2, t2 = self.on_polar(rho, theta)
        out = X.copy()
        out[..., :2] = gans_from_polar(r2, t2)
        if X.shape[-1] == 3:
            out[..., 2] = X[..., 2] + self.dz
        return out

    def on_boundary(self, theta):
        """Induced map of boundary angles (vectorised)."""
        theta = np.asarray(theta, float)
        X, Y = np.sin(theta / 2.0), np.cos(theta / 2.0)
        (a, b), (c, d) = self.matrix
        X2, Y2 = a * X + b * Y, c * X + d * Y
        return np.mod(2.0 * np.arctan2(X2, Y2), TWO_PI)


def apply(iso: Isometry, p):
    """Image of a base or product point, returned in the same model."""
    if isinstance(p, ProductPoint):
        return ProductPoint(apply(iso, p.base), p.z + iso.dz)
    if isinstance(p, HalfPlanePoint):
        x, y = iso.on_halfplane(p.x, p.y)
        return HalfPlanePoint(float(x), float(y))
    if isinstance(p, PolarPoint):
        r, t = iso.on_polar(p.rho, p.theta)
        return PolarPoint(float(r), float(t))
    raise ValidationError(f"unsupported point type {type(p).__name__}")


def boundary_action(iso: Isometry, bp):
    """Image of a boundary point (theta, t) or a bare angle."""
    from .boundary_curves import BoundaryPoint
    if isinstance(bp, BoundaryPoint):
        return BoundaryPoint(float(iso.on_boundary(bp.theta)), bp.t + iso.dz)
    return float(iso.on_boundary(bp))


def compose(*isos: Isometry) -> Isometry:
    out = isos[0]
    for g in isos[1:]:
        out = out.compose(g)
    return out


def distance_to_geodesic(x, y, axis) -> np.ndarray:
    """Distance from half-plane points to the geodesic with endpoint angles axis."""
    a = _to_zero_inf(*axis)
    iso = Isometry("Normalise", (), a, 0.0)
    u, v = iso.on_halfplane(x, y)
    return np.arcsinh(np.abs(u) / v)


def gans_distance_to_geodesic(X, axis) -> np.ndarray:
    x, y = halfplane_from_gans(np.asarray(X, float)[..., :2])
    return distance_to_geodesic(x, y, axis)


def dilation_angle(t: float, theta1: float) -> float:
    """theta_t: image of theta1 under z -> t z, for theta1 in (0, pi)."""
    return float(2.0 * math.atan(t * math.tan(theta1 / 2.0)))
