"""The Finsler N-Laplacian Q_N u = div(F^{N−1}(∇u) DF(∇u)).

Three independent discretisations are provided: a staggered flux stencil on
analytic gradients (:func:`qN_residual`), a fully discrete grid operator
(:func:`qN_fd`) and a radial shooting solver for the reduced ODE
(:func:`radial_shoot`), which is cross-checked by differencing its own flux.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, InvalidInput, InvalidParameter
from .norms import NormModel
from .reports import CheckReport, to_builtin
from .rk import dopri5
from .solution import SolutionParams, du_of_t, eval_grad_u, eval_u, u_of_t

DEGENERATE_GRADIENT = 1e-10
SERIES_SWITCH = 1e-4


@dataclass(frozen=True)
class FluxField:
    """A(X) = F^{N−1}(X) DF(X), extended by A(0) = 0."""

    norm: NormModel
    exponent: int

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        F = self.norm.value(X)
        small = F < DEGENERATE_GRADIENT
        safe = np.where(small[..., None], 1.0, X)
        out = (F ** (self.exponent - 1))[..., None] * self.norm.gradient(safe)
        return np.where(small[..., None], 0.0, out)


def flux(field: FluxField, X):
    return field(X)


# -- ambient residuals ---------------------------------------------------------


@dataclass
class ResidualReport:
    """Pointwise residual of −Q_N u = F̂°^{−β} e^u."""

    points: np.ndarray
    residuals: np.ndarray
    max_abs: float
    max_rel: float
    fd_step: float

    def to_dict(self) -> dict:
        return to_builtin({"points": self.points, "residuals": self.residuals,
                           "max_abs": self.max_abs, "max_rel": self.max_rel,
                           "fd_step": self.fd_step})

    def check(self, tol: float) -> CheckReport:
        return CheckReport.equality("qN_residual", self.max_rel, 0.0, tol,
                                    max_abs=self.max_abs, fd_step=self.fd_step,
                                    points=len(self.points))


def staggered_divergence(grad, field: FluxField, points, h: float):
    """Σ_i [A_i(g(x + h/2 e_i)) − A_i(g(x − h/2 e_i))]/h for a gradient map g."""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    div = np.zeros(points.shape[:-1])
    for i in range(n):
        e = np.zeros(n)
        e[i] = 0.5 * h
        div += (field(grad(points + e))[..., i] - field(grad(points - e))[..., i]) / h
    return div


def qN_residual(params: SolutionParams, points, h: float, *, gradient=None,
                value=None) -> ResidualReport:
    """Q_N u + F̂°^{−β} e^u at each point, from analytic gradients.

    ``gradient``/``value`` override the classified solution, which lets the
    same stencil run on other fields (for example constants).
    """
    if not (np.isfinite(h) and h > 0):
        raise InvalidParameter("finite-difference step h must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != params.N or not np.all(np.isfinite(pts)):
        raise InvalidInput(f"points must be finite with {params.N} coordinates")
    if np.any(np.linalg.norm(pts, axis=-1) < 10 * h):
        raise GeometryError("sample points must stay at least 10h away from the origin")
    grad = gradient if gradient is not None else (lambda x: eval_grad_u(params, x))
    val = value if value is not None else (lambda x: eval_u(params, x))
    field_ = FluxField(params.norm, params.N)
    div = staggered_divergence(grad, field_, pts, h)
    source = params.norm.hat_polar(pts) ** (-params.beta) * np.exp(val(pts))
    res = div + source
    return ResidualReport(pts, res, float(np.abs(res).max()),
                          float(np.abs(res).max() / np.abs(source).max()), float(h))


def annulus_points(norm: NormModel, count: int, r_in: float, r_out: float, seed: int = 0):
    """Random points with r_in <= F̂°(x) <= r_out."""
    rng = np.random.default_rng(seed)
    n = norm.dimension
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1)[:, None]
    t = rng.uniform(r_in, r_out, count)
    return (t / norm.hat_polar(d))[:, None] * d


def qN_fd(u_grid, norm: NormModel, N: int, h: float):
    """Fully discrete Q_N on a uniform grid with spacing h.

    Face gradients use a one-sided difference normal to the face and the mean
    of the centred differences at the two adjacent nodes tangentially; the
    divergence is the difference of face fluxes. The outer layer is NaN.
    """
    u = np.asarray(u_grid, dtype=float)
    if u.ndim != N or norm.dimension != N:
        raise InvalidInput(f"expected an {N}-dimensional grid for an N={N} norm")
    if min(u.shape) < 5:
        raise InvalidInput("grid needs at least 5 points per axis")
    if not (np.isfinite(h) and h > 0):
        raise InvalidParameter("grid spacing must be positive")
    field_ = FluxField(norm, N)
    central = [np.full(u.shape, np.nan) for _ in range(N)]
    for k in range(N):
        inner = [slice(None)] * N
        inner[k] = slice(1, -1)
        hi = [slice(None)] * N
        hi[k] = slice(2, None)
        lo = [slice(None)] * N
        lo[k] = slice(None, -2)
        central[k][tuple(inner)] = (u[tuple(hi)] - u[tuple(lo)]) / (2 * h)
    out = np.zeros(u.shape)
    for i in range(N):
        a = [slice(None)] * N
        a[i] = slice(None, -1)
        b = [slice(None)] * N
        b[i] = slice(1, None)
        a, b = tuple(a), tuple(b)
        comps = []
        for k in range(N):
            if k == i:
                comps.append((u[b] - u[a]) / h)
            else:
                comps.append(0.5 * (central[k][a] + central[k][b]))
        face = field_(np.stack(comps, axis=-1))[..., i]
        div = np.full(u.shape, np.nan)
        mid = [slice(None)] * N
        mid[i] = slice(1, -1)
        fa = [slice(None)] * N
        fa[i] = slice(1, None)
        fb = [slice(None)] * N
        fb[i] = slice(None, -1)
        div[tuple(mid)] = (face[tuple(fa)] - face[tuple(fb)]) / h
        out += div
    edge = np.zeros(u.shape, dtype=bool)
    for i in range(N):
        s = [slice(None)] * N
        s[i] = [0, -1]
        edge[tuple(s)] = True
    out[edge] = np.nan
    return out


# -- radial reduction ------------------------------------------------------------


@dataclass
class RadialProfile:
    """u(t), −u'(t) and the radial flux g = t^{N−1}(−u')^{N−1} on a grid."""

    N: int
    beta: float
    grid: np.ndarray
    u_values: np.ndarray
    minus_du: np.ndarray
    g: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.u_values = np.asarray(self.u_values, dtype=float)
        self.minus_du = np.asarray(self.minus_du, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        if not (self.grid.shape == self.u_values.shape == self.minus_du.shape == self.g.shape):
            raise InvalidInput("profile arrays must have equal length")
        if np.any(np.diff(self.grid) <= 0) or self.grid[0] < 0:
            raise InvalidInput("profile grid must be increasing and nonnegative")
        if np.any(self.minus_du < 0):
            raise InvalidInput("only nonincreasing profiles (u' <= 0) are supported")

    def columns(self):
        return self.grid, self.u_values, self.minus_du, self.g


def _check_radial_beta(N, beta):
    if int(N) != N or N < 2:
        raise InvalidParameter("N must be an integer >= 2")
    if not (np.isfinite(beta) and 0 <= beta < N):
        raise InvalidParameter(f"beta must lie in (0, N={N}); got {beta}")


def radial_shoot(N: int, beta: float, u0: float, t_max: float, tol: float = 1e-9,
                 samples: int = 4097, t_eval=None) -> RadialProfile:
    """Solve g' = t^{N−1−β} e^u, −u' = (g/t^{N−1})^{1/(N−1)}, u(0) = u0.

    Integration runs in s = log t, where the system becomes
    du/ds = −g^{1/(N−1)} and dg/ds = e^{(N−β)s + u}. The first segment is
    replaced by the two-term expansion about the origin.
    """
    _check_radial_beta(N, beta)
    if not (np.isfinite(t_max) and t_max > 0):
        raise InvalidParameter("t_max must be positive")
    if not (np.isfinite(tol) and tol > 0):
        raise InvalidParameter("tol must be positive")
    if not np.isfinite(u0):
        raise InvalidParameter("u0 must be finite")
    e = N - beta
    qp = e / (N - 1)
    a = math.exp(u0)
    c1 = (a / e) ** (1.0 / (N - 1))
    k = c1 / qp
    # keep the neglected (k t^{q'})^2 term of the expansion below roundoff
    t0 = min(SERIES_SWITCH, t_max, (1e-8 / k) ** (1.0 / qp))
    u_start = u0 - k * t0 ** qp
    g_start = a * (t0 ** e / e - k * t0 ** (e + qp) / (e + qp))

    def rhs(s, y):
        return np.array([-max(y[1], 0.0) ** (1.0 / (N - 1)),
                         math.exp(e * s + y[0])])

    if t_eval is None:
        t_eval = np.geomspace(min(SERIES_SWITCH, t_max), t_max, samples)
    t_eval = np.asarray(t_eval, dtype=float)
    t_eval = t_eval[t_eval > 0]
    if np.any(np.diff(t_eval) <= 0):
        raise InvalidInput("t_eval must be increasing")
    early = t_eval < t0
    late = t_eval[~early]
    # g starts near 0, so it is controlled in relative terms only
    out, steps = dopri5(rhs, math.log(t0), [u_start, g_start], np.log(late),
                        rtol=tol, atol=np.array([tol, tol * 1e-30]))
    te = t_eval[early]
    u_e = u0 - k * te ** qp
    g_e = a * (te ** e / e - k * te ** (e + qp) / (e + qp))
    grid = np.concatenate(([0.0], te, late))
    u = np.concatenate(([u0], u_e, out[:, 0]))
    g = np.concatenate(([0.0], g_e, out[:, 1]))
    with np.errstate(divide="ignore"):
        mdu = np.concatenate(([0.0 if qp > 1 else (c1 if qp == 1 else np.inf)],
                              np.maximum(g[1:], 0.0) ** (1.0 / (N - 1)) / grid[1:]))
    return RadialProfile(N, float(beta), grid, u, mdu, g,
                         {"tol": tol, "steps": steps, "series_switch": t0, "u0": u0})


def closed_form_profile(params: SolutionParams, grid) -> RadialProfile:
    """The classified solution sampled as a radial profile."""
    t = np.asarray(grid, dtype=float)
    mdu = -du_of_t(params, t)
    n = params.N
    g = t ** (n - 1) * mdu ** (n - 1)
    g = np.where(t == 0, 0.0, g)
    return RadialProfile(n, params.beta, t, u_of_t(params, t), mdu, g,
                         {"lambda": params.lam, "closed_form": True})


def _fd_weights(offsets, order: int = 1):
    """Finite-difference weights for the ``order``-th derivative at 0 from
    the given (scaled) offsets, one stencil per row."""
    offsets = np.asarray(offsets, dtype=float)
    m = offsets.shape[-1]
    powers = np.arange(m)
    V = offsets[..., None, :] ** powers[:, None]
    rhs = np.zeros(offsets.shape[:-1] + (m,))
    rhs[..., order] = math.factorial(order)
    return np.linalg.solve(V, rhs[..., None])[..., 0]


def profile_derivative(t, y, width: int = 9):
    """dy/dt on a nonuniform grid by local polynomial stencils of ``width``
    nodes (order width−1 away from the ends)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    n = t.size
    width = min(width, n)
    start = np.clip(np.arange(n) - width // 2, 0, n - width)
    idx = start[:, None] + np.arange(width)[None, :]
    h = np.abs(t[idx] - t[:, None]).max(axis=1)
    w = _fd_weights((t[idx] - t[:, None]) / h[:, None])
    return np.sum(w * y[idx], axis=1) / h


def radial_operator_check(profile: RadialProfile, beta: float, tol: float = 1e-6,
                          window=None) -> CheckReport:
    """Defect t^{1−N} dg/dt − t^{−β} e^u, with dg/dt from the stored flux.

    The flux is differentiated in log t, where adaptive and geometric grids
    are close to uniform. The reported value is the defect divided by
    max(1, t^{−β} e^u): absolute where the source is moderate and relative
    where the weight blows up near the origin. ``window`` restricts the
    maximum to a t-interval.
    """
    t, u, g = profile.grid, profile.u_values, profile.g
    pos = t > 0
    tp, up, gp = t[pos], u[pos], g[pos]
    n = profile.N
    dg_ds = profile_derivative(np.log(tp), gp)
    source = tp ** (-beta) * np.exp(up)
    defect = tp ** (-n) * dg_ds - source
    scaled = defect / np.maximum(1.0, source)
    mask = np.ones(tp.size, dtype=bool)
    if window is not None:
        mask = (tp >= window[0]) & (tp <= window[1])
    if not np.any(mask):
        raise InvalidInput("window contains no profile points")
    worst = int(np.argmax(np.abs(scaled[mask])))
    return CheckReport.equality(
        "radial_operator_defect", float(np.abs(scaled[mask]).max()), 0.0, tol,
        witness_t=float(tp[mask][worst]), signed_defect=float(defect[mask][worst]),
        max_abs_defect=float(np.abs(defect[mask]).max()),
        points=int(mask.sum()), N=n, beta=beta)
