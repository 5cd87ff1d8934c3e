"""The classified radial solutions of −Q_N u = F̂°(x)^{-β} e^u.

Every member is a function of t = F̂°(x) alone:

    u(t) = log(C λ^N) − N log(1 + λ^q t^{q'}),
    C = (N/(N−1))^{N−1} (N−β)^N,  q = N/(N−1),  q' = (N−β)/(N−1).

All profile formulas below are written in terms of s = q log λ + q' log t so
that neither the origin nor very large radii lose precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import AccuracyError, DomainError, InvalidInput, InvalidParameter
from .norms import ORIGIN_EPS, NormModel
from .quadrature import GRADING_RATIO, integrate, panel_rule, sphere_rule
from .reports import CheckReport


@dataclass(frozen=True)
class SolutionParams:
    """(N, β, λ, F) naming one classified solution.

    β = 0 is accepted: it is the unweighted Liouville equation, used by
    several reference values, even though the weighted theory needs β > 0.
    """

    N: int
    beta: float
    lam: float
    norm: NormModel

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise InvalidParameter("N must be an integer >= 2")
        object.__setattr__(self, "N", int(self.N))
        if self.norm.dimension != self.N:
            raise InvalidParameter(
                f"norm dimension {self.norm.dimension} does not match N={self.N}")
        if not (np.isfinite(self.beta) and 0 <= self.beta < self.N):
            raise InvalidParameter(f"beta must lie in (0, N={self.N}); got {self.beta}")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise InvalidParameter(f"lambda must be positive; got {self.lam}")
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def euclidean(cls, N: int = 2, beta: float = 0.0, lam: float = 1.0):
        return cls(N, beta, lam, NormModel.euclidean(N))

    @property
    def q(self) -> float:
        return self.N / (self.N - 1)

    @property
    def q_prime(self) -> float:
        return (self.N - self.beta) / (self.N - 1)

    @property
    def log_C(self) -> float:
        n = self.N
        return (n - 1) * math.log(n / (n - 1)) + n * math.log(n - self.beta)

    @property
    def u0(self) -> float:
        """u(0) = max u = log(C λ^N)."""
        return self.log_C + self.N * math.log(self.lam)

    @property
    def gamma0(self) -> float:
        """Exact decay rate N(N−β)/(N−1)."""
        return self.N * (self.N - self.beta) / (self.N - 1)

    @property
    def H_inf(self) -> float:
        """lim_{t→∞} u(t) + γ₀ log t."""
        return self.log_C - self.N * math.log(self.lam) / (self.N - 1)

    @property
    def mass_constant(self) -> float:
        """N (N(N−β)/(N−1))^{N−1} κ_N."""
        return self.N * self.gamma0 ** (self.N - 1) * self.norm.kappa

    @property
    def peak_radius(self) -> float:
        """Maximiser of t^{N−β} e^{u(t)}, the mass density per log-radius."""
        return ((self.N - 1) / self.lam ** self.q) ** (1.0 / self.q_prime)

    def describe(self) -> dict:
        return {"N": self.N, "beta": self.beta, "lambda": self.lam,
                "norm": self.norm.describe()}


# -- radial profile -------------------------------------------------------------


def _s(params: SolutionParams, t):
    with np.errstate(divide="ignore"):
        return params.q * math.log(params.lam) + params.q_prime * np.log(t)


def u_of_t(params: SolutionParams, t):
    """Profile u as a function of t = F̂°(x) >= 0."""
    t = np.asarray(t, dtype=float)
    return params.u0 - params.N * np.logaddexp(0.0, _s(params, t))


def du_of_t(params: SolutionParams, t):
    """u'(t) = −N q' λ^q t^{q'−1} / (1 + λ^q t^{q'}); finite at 0 iff q' >= 1."""
    t = np.asarray(t, dtype=float)
    n, qp = params.N, params.q_prime
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -n * qp * expit(_s(params, t)) / t
    if np.any(t == 0):
        at0 = 0.0 if qp > 1 else (-n * params.lam ** params.q if qp == 1 else -np.inf)
        out = np.where(t == 0, at0, out)
    return out


def decay_coefficient(params: SolutionParams, t):
    """t (u'(t) + γ₀/t) = γ₀ / (1 + λ^q t^{q'}), without cancellation."""
    return params.gamma0 * expit(-_s(params, np.asarray(t, dtype=float)))


def _points(params: SolutionParams, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (params.N,):
        raise InvalidInput(f"points must have trailing dimension {params.N}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("points must be finite")
    return x


def eval_u(params: SolutionParams, x):
    """u(x) for one point or an array of points; finite at the origin."""
    x = _points(params, x)
    return u_of_t(params, params.norm.hat_polar(x))


def eval_grad_u(params: SolutionParams, x):
    """∇u(x) = u'(F̂°(x)) ∇F̂°(x)."""
    x = _points(params, x)
    if np.any(np.linalg.norm(x, axis=-1) < ORIGIN_EPS):
        raise DomainError("∇u is not defined at the origin")
    t = params.norm.hat_polar(x)
    return du_of_t(params, t)[..., None] * params.norm.hat_polar_gradient(x)


# -- mass -----------------------------------------------------------------------

# the integrand t^{N−β} e^{u} in log-radius is cut where it falls below this
# fraction of its peak; head and tail beyond the cut are added analytically
_CUT = 1e-16


def _tail_constants(params: SolutionParams):
    """e^{u(t)} ~ c_tail t^{−γ₀} as t → ∞; returns (c_tail, γ₀ − (N−β))."""
    n = params.N
    m = params.gamma0 - (n - params.beta)
    if m <= 0:
        raise AccuracyError("tail exponent is not integrable; parameters are inconsistent")
    c_tail = math.exp(params.log_C + n * math.log(params.lam) * (1 - params.q))
    return c_tail, m


def radial_moment(params: SolutionParams, t_lo: float = 0.0, t_hi: float = math.inf,
                  rtol: float = 1e-14) -> float:
    """∫_{t_lo}^{t_hi} t^{N−1−β} e^{u(t)} dt, integrated in log t.

    Outside the window where the integrand exceeds 1e-16 of its peak the
    leading power laws are integrated in closed form.
    """
    n, b = params.N, params.beta
    e = n - b
    c_tail, m = _tail_constants(params)
    y_peak = math.log(params.peak_radius)
    y_lo = y_peak - (-math.log(_CUT) + n) / e
    y_hi = y_peak + (-math.log(_CUT) + n) / m
    a = max(y_lo, math.log(t_lo)) if t_lo > 0 else y_lo
    z = min(y_hi, math.log(t_hi)) if math.isfinite(t_hi) else y_hi
    total = 0.0
    if a < z:
        def f(y):
            return np.exp(e * y + u_of_t(params, np.exp(y)))
        total += integrate(f, a, z, rtol=rtol, panels=8, order=24)
    if t_lo < math.exp(y_lo):
        # u ≈ u0 near the origin: head = e^{u0} t^{N−β}/(N−β)
        lo = min(math.exp(y_lo), t_hi)
        total += math.exp(params.u0) * (lo ** e - t_lo ** e) / e
    if t_hi > math.exp(y_hi):
        hi = max(math.exp(y_hi), t_lo)
        total += c_tail * (hi ** -m - (t_hi ** -m if math.isfinite(t_hi) else 0.0)) / m
    return total


def _mass_full_nd(params: SolutionParams, tail_fraction: float = 1e-4) -> float:
    """Ambient quadrature of F̂°^{-β} e^u over a box [−L, L]^N plus the
    exterior power-law tail integrated over Euclidean rays."""
    n, b, norm = params.N, params.beta, params.norm
    c_tail, m = _tail_constants(params)
    total_guess = params.mass_constant
    # exterior of the box lies outside the F̂° ball of radius α̂ L, where
    # α̂ = min F̂° on the unit sphere >= 1/η(F̂); bound the tail by the radial tail
    g_min = float(norm.hat_polar(sphere_rule(n, 0)[0]).min())
    L = 1.0
    while (n * norm.kappa * c_tail * (g_min * L) ** -m / m > tail_fraction * total_guess
           and L < 1e300):
        L *= 2.0
    t_star = params.peak_radius
    inner = min(1e-6 * t_star, 1e-3 * L)
    per_half = {2: 14, 3: 8}.get(n, 6)
    decades = math.log(L / inner)
    panels = max(8, int(math.ceil(decades / math.log(1 / GRADING_RATIO ** 0.5))))
    half = np.concatenate(([0.0], np.geomspace(inner, L, panels)))
    nodes, w = panel_rule(half, per_half)
    axis = np.concatenate((-nodes[::-1], nodes))
    wax = np.concatenate((w[::-1], w))

    def density(pts):
        t = norm.hat_polar(pts)
        return t ** (-b) * np.exp(u_of_t(params, t))

    if n == 2:
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        box = float(wax @ density(np.stack((X, Y), axis=-1)) @ wax)
    else:
        box = 0.0
        Y, Z = np.meshgrid(axis, axis, indexing="ij")
        wyz = np.outer(wax, wax)
        for xi, wi in zip(axis, wax):
            pts = np.stack((np.full_like(Y, xi), Y, Z), axis=-1)
            box += wi * float(np.sum(wyz * density(pts)))
    # exterior: on the ray sω, s >= s_box = L/max|ω_i|, use e^u ≈ c t^{−γ₀}
    dirs, wd = sphere_rule(n, 1)
    g = norm.hat_polar(dirs)
    s_box = L / np.abs(dirs).max(axis=1)
    ext = float(np.dot(wd, g ** (-n) * c_tail * (s_box * g) ** (-m) / m))
    return box + ext


def mass(params: SolutionParams, method: str = "radial_1d") -> float:
    """Total mass ∫_{R^N} F̂°(x)^{-β} e^{u(x)} dx."""
    if method == "radial_1d":
        return params.N * params.norm.kappa * radial_moment(params)
    if method == "full_nd":
        if params.N > 3:
            raise InvalidParameter("full_nd quadrature is available for N = 2, 3")
        return _mass_full_nd(params)
    raise InvalidParameter(f"unknown mass method {method!r}")


def gamma0(params: SolutionParams, method: str = "radial_1d") -> float:
    """(mass / (N κ_N))^{1/(N−1)} from a measured mass."""
    return (mass(params, method) / (params.N * params.norm.kappa)) ** (1.0 / (params.N - 1))


# -- asymptotics ----------------------------------------------------------------


@dataclass
class AsymptoticsReport:
    """Large-radius behaviour of one solution sampled at ``radii``."""

    gamma_measured: float
    gamma_expected: float
    H_inf: float
    radii: np.ndarray
    H: np.ndarray
    grad_decay: list
    sandwich_d: float
    details: dict = field(default_factory=dict)

    def check(self, slope_tol: float = 1e-3) -> CheckReport:
        return CheckReport.equality(
            "asymptotic_slope", self.gamma_measured, self.gamma_expected, slope_tol,
            H_inf=self.H_inf, H_last=float(self.H[-1]),
            H_deviation=float(np.abs(self.H - self.H_inf).max()),
            grad_decay=self.grad_decay, sandwich_d=self.sandwich_d, **self.details)

    def columns(self):
        return self.radii, self.H, np.array([g for _, g in self.grad_decay])


def grad_decay(params: SolutionParams, t, directions: int | None = None):
    """max over the Wulff sphere {F̂° = t} of t F(∇(u + γ₀ log F̂°)).

    The gradient there is (γ₀/(t(1+λ^q t^{q'}))) ∇F̂°, so the sphere maximum is
    the decay coefficient times max F(∇F̂°), which equals 1 for symmetric F.
    """
    n = params.N
    dirs, _ = sphere_rule(n, 0)
    if directions is not None:
        dirs = dirs[:: max(1, len(dirs) // directions)]
    factor = float(params.norm.value(params.norm.hat_polar_gradient(dirs)).max())
    return decay_coefficient(params, t) * factor


def asymptotics_check(params: SolutionParams, radii) -> AsymptoticsReport:
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < 2:
        raise InvalidInput("need at least two radii")
    if np.any(np.diff(radii) <= 0) or radii[0] <= 1:
        raise InvalidParameter("radii must be increasing and greater than 1")
    n = params.N
    logt = np.log(radii)
    u = u_of_t(params, radii)
    slope = -np.polyfit(logt, u, 1)[0]
    # H(t) = H_inf − N log(1 + λ^{−q} t^{−q'}), exact form of u + γ₀ log t
    H = params.H_inf - n * np.logaddexp(0.0, -_s(params, radii))
    gd = grad_decay(params, radii)
    # sandwich for ũ = u0 − u = N log(1 + λ^q t^{q'}) on the sampled radii >= 10
    big = radii >= 10
    d = math.nan
    if np.any(big):
        ratio = n * np.logaddexp(0.0, _s(params, radii[big])) / logt[big]
        d = float(max(ratio.max(), (1 / ratio).max()))
    return AsymptoticsReport(float(slope), params.gamma0, params.H_inf, radii, H,
                             [(float(a), float(b)) for a, b in zip(radii, gd)], d,
                             {"params": params.describe()})


# -- level sets -----------------------------------------------------------------


def level_set_radius(params: SolutionParams, level: float):
    """R with {u > level} = W_R, 0 when level = u(0), None above u(0)."""
    level = float(level)
    if level > params.u0:
        return None
    if level == params.u0:
        return 0.0
    base = math.expm1((params.u0 - level) / params.N)
    return params.lam ** (-params.q / params.q_prime) * base ** (1.0 / params.q_prime)
