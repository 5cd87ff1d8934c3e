"""Wulff balls, weighted volumes and perimeters, and the weighted anisotropic
isoperimetric quotient.

Weights are always powers of F̂°(x) = F°(-x), i.e. of the gauge whose unit
ball is the Wulff shape W_1 = {F̂° <= 1}. Volumes are computed in polar
coordinates about the origin when the origin lies inside the domain, so the
power-law singularity at 0 is integrated exactly along each ray.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, GeometryError, InvalidInput, InvalidParameter
from .norms import NormModel
from .quadrature import integrate_sphere, panel_rule, sphere_rule
from .reports import CheckReport

ORIGIN_CLEARANCE = 1e-8


@dataclass(frozen=True)
class SurfaceQuadrature:
    """Boundary rule: points, positive weights (surface measure) and outward
    unit normals."""

    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def flux_closure(self) -> float:
        """max_i |∮ ν_i dσ|, which vanishes for a closed surface."""
        return float(np.abs(self.weights @ self.normals).max())

    def __add__(self, other: "SurfaceQuadrature") -> "SurfaceQuadrature":
        return SurfaceQuadrature(np.concatenate((self.nodes, other.nodes)),
                                 np.concatenate((self.weights, other.weights)),
                                 np.concatenate((self.normals, other.normals)))

    def flipped(self) -> "SurfaceQuadrature":
        return SurfaceQuadrature(self.nodes, self.weights, -self.normals)


class DomainSpec:
    """A bounded integration domain Ω with a boundary rule at any resolution.

    ``level`` doubles the number of boundary/direction nodes per step.
    """

    dim: int

    def boundary(self, level: int = 0) -> SurfaceQuadrature:
        raise NotImplementedError

    def origin_inside(self) -> bool:
        raise NotImplementedError

    def ray_extent(self, dirs):
        """(inner, outer) radial extent of Ω along each origin ray."""
        raise NotImplementedError

    def weighted_volume_at(self, norm: NormModel, beta: float, level: int) -> float:
        # exact radial integral of (s F̂°(ω))^{-β} s^{N-1} on each ray
        dirs, w = sphere_rule(self.dim, level)
        lo, hi = self.ray_extent(dirs)
        e = self.dim - beta
        radial = (hi ** e - lo ** e) / e
        return float(np.dot(w, norm.hat_polar(dirs) ** (-beta) * radial))

    def describe(self) -> dict:
        raise NotImplementedError


class GaugeBody(DomainSpec):
    """Ω = {x : G(x - c) <= r} for a convex 1-homogeneous gauge G."""

    kind = "gauge_body"

    def __init__(self, gauge, gauge_grad, radius: float, center=None, dim: int = 2):
        if not radius > 0:
            raise InvalidParameter("radius must be positive")
        self.gauge, self.gauge_grad = gauge, gauge_grad
        self.radius = float(radius)
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        self.dim = self.center.size

    @property
    def centered(self) -> bool:
        return not np.any(self.center)

    def origin_margin(self) -> float:
        """G(-c) - r: negative inside, positive outside, zero on ∂Ω."""
        return float(self.gauge(-self.center) - self.radius)

    def origin_inside(self) -> bool:
        return self.origin_margin() < 0

    def boundary(self, level: int = 0) -> SurfaceQuadrature:
        dirs, w = sphere_rule(self.dim, level)
        g = self.gauge(dirs)
        rho = self.radius / g
        grad = self.gauge_grad(dirs)
        gn = np.linalg.norm(grad, axis=1)
        # cone formula: <y,ν> dσ = ρ^N dω and <y,ν> = r/|∇G|
        weights = w * rho ** self.dim * gn / self.radius
        return SurfaceQuadrature(self.center + rho[:, None] * dirs, weights, grad / gn[:, None])

    def ray_extent(self, dirs):
        if not self.origin_inside():
            raise GeometryError("origin rays only parameterise domains containing the origin")
        if self.centered:
            return np.zeros(len(dirs)), self.radius / self.gauge(dirs)
        # G(sω - c) is convex in s, below r at s=0; bisect on [0, s_hi]
        c = self.center
        s_hi = (self.radius + self.gauge(c)) / self.gauge(dirs)
        lo, hi = np.zeros(len(dirs)), s_hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            out = self.gauge(mid[:, None] * dirs - c) > self.radius
            hi = np.where(out, mid, hi)
            lo = np.where(out, lo, mid)
            if np.all(hi - lo <= 4e-16 * hi):
                break
        return np.zeros(len(dirs)), 0.5 * (lo + hi)

    def weighted_volume_at(self, norm, beta, level):
        if self.origin_inside():
            return super().weighted_volume_at(norm, beta, level)
        # origin outside: polar coordinates about the centre, weight is smooth
        dirs, w = sphere_rule(self.dim, level)
        rho = self.radius / self.gauge(dirs)
        s, ws = panel_rule(np.array([0.0, 1.0]), 24 * 2 ** level)
        pts = self.center + (rho[:, None, None] * s[None, :, None]) * dirs[:, None, :]
        f = norm.hat_polar(pts) ** (-beta) * (rho[:, None] * s[None, :]) ** (self.dim - 1)
        return float(np.dot(w * rho, f @ ws))

    def describe(self):
        return {"kind": self.kind, "radius": self.radius, "center": self.center.tolist()}


class WulffBall(GaugeBody):
    """W_r(x0) = {x : F̂°(x - x0) <= r}."""

    kind = "wulff_ball"

    def __init__(self, norm: NormModel, radius: float = 1.0, center=None):
        super().__init__(norm.hat_polar, norm.hat_polar_gradient, radius,
                         center, norm.dimension)
        self.norm = norm

    def contains(self, x):
        """Exact membership test."""
        return self.norm.hat_polar(np.asarray(x, dtype=float) - self.center) <= self.radius


class Disc(GaugeBody):
    """Euclidean ball B(c, r)."""

    kind = "disc"

    def __init__(self, radius: float, center=None, dim: int = 2):
        super().__init__(lambda x: np.linalg.norm(x, axis=-1),
                         lambda x: x / np.linalg.norm(x, axis=-1)[..., None],
                         radius, center, dim)


class Ellipse(GaugeBody):
    """Axis-aligned ellipsoid with the given semi-axes."""

    kind = "ellipse"

    def __init__(self, semi_axes, center=None):
        ax = np.asarray(semi_axes, dtype=float)
        if ax.ndim != 1 or ax.size < 2 or np.any(ax <= 0):
            raise InvalidParameter("semi-axes must be positive")
        inv2 = 1.0 / ax ** 2
        self.semi_axes = ax

        def g(x):
            return np.sqrt(np.sum(x * x * inv2, axis=-1))

        def dg(x):
            return x * inv2 / g(x)[..., None]

        super().__init__(g, dg, 1.0, center, ax.size)

    def describe(self):
        d = super().describe()
        d["semi_axes"] = self.semi_axes.tolist()
        return d


class WulffAnnulus(DomainSpec):
    """W_{r_out} minus W_{r_in}, both centred at the origin."""

    kind = "annulus"

    def __init__(self, norm: NormModel, r_in: float, r_out: float):
        if not 0 < r_in < r_out:
            raise InvalidParameter("annulus needs 0 < r_in < r_out")
        self.norm, self.r_in, self.r_out = norm, float(r_in), float(r_out)
        self.dim = norm.dimension
        self.outer = WulffBall(norm, r_out)
        self.inner = WulffBall(norm, r_in)

    def origin_inside(self) -> bool:
        return False

    def boundary(self, level: int = 0) -> SurfaceQuadrature:
        return self.outer.boundary(level) + self.inner.boundary(level).flipped()

    def ray_extent(self, dirs):
        g = self.norm.hat_polar(dirs)
        return self.r_in / g, self.r_out / g

    def describe(self):
        return {"kind": self.kind, "r_in": self.r_in, "r_out": self.r_out}


class StarDomain(DomainSpec):
    """Planar domain {s ω(θ) : 0 <= s <= ρ(θ)} with ρ given by samples on a
    uniform angular grid (trigonometric interpolation in between)."""

    kind = "star"
    dim = 2

    def __init__(self, radii):
        radii = np.asarray(radii, dtype=float)
        if radii.ndim != 1 or radii.size < 3:
            raise InvalidInput("star domain needs at least 3 radius samples")
        if not np.all(radii > 0):
            raise InvalidParameter("star radial function must be strictly positive")
        self.samples = radii
        self._coef = np.fft.rfft(radii) / radii.size

    @classmethod
    def perturbed(cls, base: float = 1.0, amplitude: float = 0.2, mode: int = 3,
                  samples: int = 64):
        th = 2 * np.pi * np.arange(samples) / samples
        return cls(base * (1 + amplitude * np.cos(mode * th)))

    def rho(self, theta, derivative: int = 0):
        m = self.samples.size
        k = np.arange(self._coef.size)
        c = self._coef.copy()
        if m % 2 == 0:
            c[-1] *= 0.5  # Nyquist term counted once after doubling
        c[1:] *= 2
        ph = np.exp(1j * np.multiply.outer(theta, k))
        return np.real(ph @ (c * (1j * k) ** derivative))

    def origin_inside(self) -> bool:
        return True

    def ray_extent(self, dirs):
        th = np.arctan2(dirs[:, 1], dirs[:, 0])
        return np.zeros(len(dirs)), self.rho(th)

    def boundary(self, level: int = 0) -> SurfaceQuadrature:
        th, w = panel_rule(0.5 * np.pi * np.arange(5), 128 * 2 ** level)
        r, dr = self.rho(th), self.rho(th, 1)
        c, s = np.cos(th), np.sin(th)
        tx, ty = dr * c - r * s, dr * s + r * c
        speed = np.hypot(tx, ty)
        normals = np.stack((ty, -tx), axis=-1) / speed[:, None]
        return SurfaceQuadrature(np.stack((r * c, r * s), axis=-1), w * speed, normals)

    def describe(self):
        return {"kind": self.kind, "samples": self.samples.tolist()}


# -- operations ---------------------------------------------------------------


def wulff_volume(norm: NormModel, rtol: float = 1e-10) -> float:
    """κ_N = (1/N) ∫_{S^{N-1}} F̂°(ω)^{-N} dω by direction quadrature."""
    n = norm.dimension
    return integrate_sphere(lambda d: norm.hat_polar(d) ** (-n), n, rtol=rtol) / n


def _check_beta(beta, dim, allow_zero=True):
    if not np.isfinite(beta) or beta < 0 or (beta == 0 and not allow_zero):
        raise InvalidParameter(f"beta must lie in (0, N); got {beta}")
    if beta >= dim:
        raise InvalidParameter(f"beta={beta} >= N={dim}: the weighted integral diverges")


def _is_origin_wulff(domain, norm):
    return isinstance(domain, WulffBall) and domain.centered and domain.norm == norm


def _refine(fn, rtol, start=0, max_level=5):
    prev = None
    for level in range(start, max_level + 1):
        val = fn(level)
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val, level
        prev = val
    raise AccuracyError(f"boundary/volume quadrature not stable: change {abs(val - prev):.3e}")


def weighted_volume(domain: DomainSpec, norm: NormModel, beta: float,
                    rtol: float = 1e-10, method: str = "auto") -> float:
    """∫_Ω F̂°(x)^{-β} dx.

    Origin-centred Wulff balls and annuli use the closed form
    N κ_N (r_out^{N-β} - r_in^{N-β})/(N-β) unless ``method="quadrature"``.
    """
    _check_beta(beta, domain.dim)
    n = domain.dim
    if method == "auto":
        if _is_origin_wulff(domain, norm):
            return n * norm.kappa * domain.radius ** (n - beta) / (n - beta)
        if isinstance(domain, WulffAnnulus) and domain.norm == norm:
            return n * norm.kappa * (domain.r_out ** (n - beta) - domain.r_in ** (n - beta)) / (n - beta)
    elif method != "quadrature":
        raise InvalidParameter(f"unknown method {method!r}")
    if isinstance(domain, GaugeBody) and abs(domain.origin_margin()) < ORIGIN_CLEARANCE:
        raise GeometryError("origin lies on the boundary of the domain")
    return _refine(lambda lv: domain.weighted_volume_at(norm, beta, lv), rtol)[0]


def weighted_perimeter(domain: DomainSpec, norm: NormModel, beta: float,
                       rtol: float = 1e-10) -> float:
    """∫_{∂Ω} F̂°(x)^{-(N-1)β/N} F̂(ν) dσ by boundary quadrature."""
    _check_beta(beta, domain.dim)
    n = domain.dim
    expo = -(n - 1) * beta / n

    def at(level):
        q = domain.boundary(level)
        if np.linalg.norm(q.nodes, axis=1).min() < ORIGIN_CLEARANCE:
            raise GeometryError("boundary passes within 1e-8 of the origin")
        return q.integrate(norm.hat_polar(q.nodes) ** expo * norm.hat(q.normals))

    if isinstance(domain, GaugeBody) and abs(domain.origin_margin()) < ORIGIN_CLEARANCE:
        raise GeometryError("origin lies on the boundary of the domain")
    return _refine(at, rtol)[0]


def isoperimetric_bound(norm: NormModel, beta: float) -> float:
    n = norm.dimension
    return (n * norm.kappa) ** (1.0 / n) * (n - beta) ** ((n - 1.0) / n)


def isoperimetric_quotient(domain: DomainSpec, norm: NormModel, beta: float,
                           tol: float = 1e-6) -> CheckReport:
    """Weighted perimeter over weighted volume^{(N-1)/N} against its sharp
    lower bound. Passes when slack >= -tol; ``details["equality"]`` records
    whether slack <= tol (expected exactly for origin-centred Wulff balls)."""
    n = domain.dim
    per = weighted_perimeter(domain, norm, beta)
    vol = weighted_volume(domain, norm, beta)
    quotient = per / vol ** ((n - 1) / n)
    bound = isoperimetric_bound(norm, beta)
    slack = quotient - bound
    details = {"perimeter": per, "volume": vol, "slack": slack,
               "equality": bool(abs(slack) <= tol),
               "origin_centred_wulff": _is_origin_wulff(domain, norm),
               "domain": domain.describe(), "beta": beta}
    if beta == 0:
        details["diagnostic"] = "beta=0 lies outside (0, N); reported for comparison only"
    return CheckReport.at_least("isoperimetric_quotient", quotient, bound, tol, **details)


def parse_domain(text: str, norm: NormModel) -> DomainSpec:
    """Parse CLI domain strings.

    ``wulff[:R[,c1,c2,...]]``, ``disc:R[,c1,...]``, ``ellipse:a,b[,...]``,
    ``annulus:r_in,r_out``, ``star:amplitude,mode``.
    """
    kind, _, rest = text.partition(":")
    try:
        vals = [float(v) for v in rest.split(",")] if rest else []
    except ValueError:
        raise InvalidInput(f"cannot parse domain {text!r}") from None
    n = norm.dimension
    kind = kind.strip().lower()
    if kind in ("wulff", "wulff_ball"):
        r = vals[0] if vals else 1.0
        c = vals[1:] or None
        if c is not None and len(c) != n:
            raise InvalidInput(f"wulff centre needs {n} coordinates")
        return WulffBall(norm, r, c)
    if kind == "disc":
        if not vals:
            raise InvalidInput("disc needs a radius")
        c = vals[1:] or None
        if c is not None and len(c) != n:
            raise InvalidInput(f"disc centre needs {n} coordinates")
        return Disc(vals[0], c, n)
    if kind == "ellipse":
        if len(vals) != n:
            raise InvalidInput(f"ellipse needs {n} semi-axes")
        return Ellipse(vals)
    if kind == "annulus":
        if len(vals) != 2:
            raise InvalidInput("annulus needs r_in,r_out")
        return WulffAnnulus(norm, *vals)
    if kind == "star":
        if n != 2:
            raise InvalidInput("star domains are planar")
        amp = vals[0] if vals else 0.2
        mode = int(vals[1]) if len(vals) > 1 else 3
        return StarDomain.perturbed(1.0, amp, mode)
    raise InvalidInput(f"unknown domain kind {kind!r}")


def sphere_area(dim: int) -> float:
    return 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)
