"""Finsler gauges F, their polars F°, the reversed pair F̂, F̂° and the
structural checks that tie them together.

A :class:`NormModel` is an immutable description of one gauge from a closed
list of smooth families. All evaluation methods are vectorised over the last
axis: ``x`` may have shape ``(N,)`` or ``(..., N)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.special import gamma as gamma_fn

from .errors import DomainError, InvalidInput, InvalidModel, InvalidParameter
from .quadrature import fibonacci_sphere
from .reports import CheckReport

FAMILIES = ("euclidean", "lp", "quadratic", "shifted")
ORIGIN_EPS = 1e-12


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _lp_value(x, p):
    m = np.max(np.abs(x), axis=-1)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum(np.abs(x / safe[..., None]) ** p, axis=-1) ** (1.0 / p)
    return np.where(m > 0, m * s, 0.0)


def _lp_gradient(x, p):
    f = _lp_value(x, p)
    s = x / f[..., None]
    return np.sign(s) * np.abs(s) ** (p - 1.0)


@dataclass(frozen=True, eq=False)
class NormModel:
    """A convex, positively 1-homogeneous gauge F on R^N.

    Families: ``euclidean``; ``lp`` (``p > 1``); ``quadratic``
    (``F(x) = sqrt(x^T A x)``, A symmetric positive definite); ``shifted``
    (``F(x) = |x| + <a, x>`` with ``|a| < 1``, the only non-symmetric one).
    """

    family: str
    dimension: int
    p: float | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)
    shift: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidModel(f"unsupported family {self.family!r}; choose from {FAMILIES}")
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise InvalidModel("dimension must be an integer >= 2")
        object.__setattr__(self, "dimension", int(self.dimension))
        n = self.dimension
        if self.family == "lp":
            if self.p is None or not np.isfinite(self.p) or self.p <= 1:
                raise InvalidModel("lp family needs a finite exponent p > 1")
            object.__setattr__(self, "p", float(self.p))
        elif self.family == "quadratic":
            A = np.array(self.matrix, dtype=float)
            if A.shape != (n, n) or not np.all(np.isfinite(A)):
                raise InvalidModel(f"quadratic family needs a finite {n}x{n} matrix")
            if not np.allclose(A, A.T, rtol=0, atol=1e-12 * np.abs(A).max()):
                raise InvalidModel("quadratic matrix must be symmetric")
            A = 0.5 * (A + A.T)
            if np.linalg.eigvalsh(A).min() <= 0:
                raise InvalidModel("quadratic matrix must be positive definite")
            A.setflags(write=False)
            Ainv = np.linalg.inv(A)
            Ainv.setflags(write=False)
            object.__setattr__(self, "matrix", A)
            object.__setattr__(self, "_inverse", Ainv)
        elif self.family == "shifted":
            a = np.array(self.shift, dtype=float).reshape(-1)
            if a.shape != (n,) or not np.all(np.isfinite(a)):
                raise InvalidModel(f"shifted family needs a finite length-{n} vector a")
            if np.linalg.norm(a) >= 1:
                raise InvalidModel("shifted family needs |a| < 1, otherwise F is not positive")
            a.setflags(write=False)
            object.__setattr__(self, "shift", a)
        _check_hessian(self)

    # -- constructors -------------------------------------------------------

    @classmethod
    def euclidean(cls, dimension: int = 2) -> "NormModel":
        return cls("euclidean", dimension)

    @classmethod
    def lp(cls, p: float, dimension: int = 2) -> "NormModel":
        return cls("lp", dimension, p=p)

    @classmethod
    def quadratic(cls, matrix) -> "NormModel":
        A = np.asarray(matrix, dtype=float)
        return cls("quadratic", A.shape[0], matrix=A)

    @classmethod
    def shifted(cls, a) -> "NormModel":
        a = np.asarray(a, dtype=float).reshape(-1)
        return cls("shifted", a.size, shift=a)

    @classmethod
    def from_config(cls, cfg: dict) -> "NormModel":
        """Build from a mapping with keys family, dimension, p, a, matrix."""
        if not isinstance(cfg, dict) or "family" not in cfg:
            raise InvalidInput("norm configuration needs a 'family' key")
        fam = str(cfg["family"]).lower()
        dim = cfg.get("dimension")
        try:
            if fam == "euclidean":
                return cls.euclidean(int(dim if dim is not None else 2))
            if fam == "lp":
                return cls.lp(float(cfg["p"]), int(dim if dim is not None else 2))
            if fam == "quadratic":
                flat = np.asarray(cfg["matrix"], dtype=float).ravel()
                n = int(dim) if dim is not None else int(round(math.sqrt(flat.size)))
                if flat.size != n * n:
                    raise InvalidInput(f"matrix has {flat.size} entries, expected {n * n}")
                return cls.quadratic(flat.reshape(n, n))
            if fam == "shifted":
                a = np.asarray(cfg["a"], dtype=float).ravel()
                if dim is not None and int(dim) != a.size:
                    raise InvalidInput("length of 'a' disagrees with 'dimension'")
                return cls.shifted(a)
        except KeyError as exc:
            raise InvalidInput(f"norm configuration for {fam!r} is missing key {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, (InvalidInput, InvalidModel)):
                raise
            raise InvalidInput(f"malformed norm configuration: {exc}") from None
        raise InvalidModel(f"unsupported family {fam!r}")

    # -- properties ---------------------------------------------------------

    @property
    def symmetric(self) -> bool:
        return self.family != "shifted" or not np.any(self.shift)

    @property
    def dual_exponent(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def alpha(self) -> float:
        """Sharp lower constant in alpha*|x| <= F(x)."""
        return self._bounds()[0]

    @property
    def eta(self) -> float:
        """Sharp upper constant in F(x) <= eta*|x|."""
        return self._bounds()[1]

    def _bounds(self):
        n = self.dimension
        if self.family == "euclidean":
            return 1.0, 1.0
        if self.family == "lp":
            c = n ** (1.0 / self.p - 0.5)
            return (c, 1.0) if self.p >= 2 else (1.0, c)
        if self.family == "quadratic":
            ev = np.linalg.eigvalsh(self.matrix)
            return float(np.sqrt(ev[0])), float(np.sqrt(ev[-1]))
        r = float(np.linalg.norm(self.shift))
        return 1.0 - r, 1.0 + r

    @property
    def kappa(self) -> float:
        """Closed-form Lebesgue measure of the unit Wulff ball {F̂° <= 1}."""
        n = self.dimension
        if self.family == "lp":
            q = self.dual_exponent
            return float((2 * gamma_fn(1 + 1 / q)) ** n / gamma_fn(1 + n / q))
        if self.family == "quadratic":
            # {x^T A^{-1} x <= 1} is A^{1/2} applied to the unit ball
            return unit_ball_volume(n) * math.sqrt(np.linalg.det(self.matrix))
        # euclidean, and shifted: {F° <= 1} is the unit ball centred at a
        return unit_ball_volume(n)

    def key(self) -> tuple:
        """Hashable identity, used for caching."""
        extra = ()
        if self.family == "lp":
            extra = (self.p,)
        elif self.family == "quadratic":
            extra = tuple(self.matrix.ravel())
        elif self.family == "shifted":
            extra = tuple(self.shift)
        return (self.family, self.dimension) + extra

    def __eq__(self, other):
        return isinstance(other, NormModel) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def describe(self) -> dict:
        d = {"family": self.family, "dimension": self.dimension}
        if self.family == "lp":
            d["p"] = self.p
        elif self.family == "quadratic":
            d["matrix"] = self.matrix.ravel().tolist()
        elif self.family == "shifted":
            d["a"] = self.shift.tolist()
        return d

    # -- evaluation (no validation; see module-level wrappers) -------------

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "euclidean":
            return np.linalg.norm(x, axis=-1)
        if self.family == "lp":
            return _lp_value(x, self.p)
        if self.family == "quadratic":
            return np.sqrt(np.einsum("...i,ij,...j->...", x, self.matrix, x))
        return np.linalg.norm(x, axis=-1) + x @ self.shift

    __call__ = value

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "euclidean":
            return x / np.linalg.norm(x, axis=-1)[..., None]
        if self.family == "lp":
            return _lp_gradient(x, self.p)
        if self.family == "quadratic":
            Ax = x @ self.matrix
            return Ax / np.sqrt(np.sum(Ax * x, axis=-1))[..., None]
        return x / np.linalg.norm(x, axis=-1)[..., None] + self.shift

    def polar(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "euclidean":
            return np.linalg.norm(x, axis=-1)
        if self.family == "lp":
            return _lp_value(x, self.dual_exponent)
        if self.family == "quadratic":
            return np.sqrt(np.einsum("...i,ij,...j->...", x, self._inverse, x))
        return _shifted_polar(x, self.shift)

    def polar_gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "euclidean":
            return x / np.linalg.norm(x, axis=-1)[..., None]
        if self.family == "lp":
            return _lp_gradient(x, self.dual_exponent)
        if self.family == "quadratic":
            Bx = x @ self._inverse
            return Bx / np.sqrt(np.sum(Bx * x, axis=-1))[..., None]
        a = self.shift
        t = _shifted_polar(x, a)[..., None]
        y = x - t * a
        return y / (y @ a + t[..., 0])[..., None]

    def reverse(self) -> "NormModel":
        """The gauge x -> F(-x)."""
        if self.family == "shifted":
            return NormModel.shifted(-self.shift)
        return self

    # reversed pair: F̂(ξ) = F(-ξ), F̂°(x) = F°(-x)

    def hat(self, x):
        return self.value(-np.asarray(x, dtype=float))

    def hat_polar(self, x):
        return self.polar(-np.asarray(x, dtype=float))

    def hat_polar_gradient(self, x):
        return -self.polar_gradient(-np.asarray(x, dtype=float))


def _shifted_polar(x, a):
    # positive root of t^2 (1-|a|^2) + 2 t <a,x> - |x|^2 = 0, in the
    # cancellation-free branch for each sign of <a,x>
    ax = x @ a
    xx = np.sum(x * x, axis=-1)
    c = 1.0 - a @ a
    disc = np.sqrt(ax * ax + c * xx)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(ax >= 0, xx / (ax + disc), (disc - ax) / c)
    return np.where(xx > 0, t, 0.0)


def _check_hessian(model: NormModel, h: float = 1e-4, floor: float = -1e-6):
    """Reject the model if a finite-difference Hessian of F^2 on sampled
    sphere points has a clearly negative eigenvalue."""
    n = model.dimension
    if n == 2:
        th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        dirs = np.stack((np.cos(th), np.sin(th)), axis=-1)
    else:
        dirs = np.random.default_rng(0).normal(size=(96, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    E = np.eye(n) * h
    f2 = lambda y: model.value(y) ** 2  # noqa: E731
    H = np.empty((dirs.shape[0], n, n))
    for i in range(n):
        for j in range(i, n):
            v = (f2(dirs + E[i] + E[j]) - f2(dirs + E[i] - E[j])
                 - f2(dirs - E[i] + E[j]) + f2(dirs - E[i] - E[j])) / (4 * h * h)
            H[:, i, j] = H[:, j, i] = v
    lam = np.linalg.eigvalsh(H)[:, 0]
    if not np.all(np.isfinite(lam)) or lam.min() < floor:
        k = int(np.nanargmin(lam))
        raise InvalidModel(
            f"Hess(F^2) not positive definite near direction {dirs[k]} (eigenvalue {lam[k]:.3e})")


def load_norm_config(path) -> NormModel:
    """Read a norm from a YAML/JSON/``key: value`` text file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read norm configuration {path}: {exc}") from None
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidInput(f"cannot parse norm configuration {path}: {exc}") from None
    return NormModel.from_config(cfg)


# -- validated single-point operations ---------------------------------------


def _finite(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dim,):
        raise InvalidInput(f"expected vectors of length {dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("non-finite input vector")
    return x


def eval_norm(model: NormModel, x):
    return model.value(_finite(x, model.dimension))


def eval_gradient(model: NormModel, x):
    x = _finite(x, model.dimension)
    if np.any(np.linalg.norm(x, axis=-1) < ORIGIN_EPS):
        raise DomainError("DF is undefined at the origin")
    return model.gradient(x)


def polar(model: NormModel, x, method: str = "closed"):
    x = _finite(x, model.dimension)
    if method == "closed":
        return model.polar(x)
    if method == "numeric":
        return polar_numeric(model.value, x)
    raise InvalidParameter(f"unknown polar method {method!r}")


def reverse(model: NormModel) -> NormModel:
    return model.reverse()


# -- optimisation on the sphere ---------------------------------------------


def _tangent_basis(p):
    ref = np.where(np.abs(p[:, :1]) < 0.9, np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))
    e1 = np.cross(p, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(p, e1)
    return e1, e2


def maximize_on_sphere(objective, dim: int, batch: int, n_grid: int | None = None,
                       chunk: int = 2_000_000):
    """Maximise ``batch`` independent objectives over S^{dim-1}.

    ``objective(points, idx)`` receives points of shape ``(b, k, dim)`` for the
    batch members ``idx`` and returns values ``(b, k)``. 2D: angular grid then
    golden-section refinement; 3D: Fibonacci grid then a shrinking pattern
    search in the tangent plane. Returns ``(values, maximisers)``.
    """
    if dim == 2:
        n_grid = n_grid or 4096
        th = 2 * np.pi * np.arange(n_grid) / n_grid
        grid = np.stack((np.cos(th), np.sin(th)), axis=-1)
    elif dim == 3:
        n_grid = n_grid or 8192
        grid = fibonacci_sphere(n_grid)
    else:
        raise NotImplementedError("sphere search exists for dimensions 2 and 3")
    best = np.empty((batch, dim))
    step = max(1, chunk // n_grid)
    for s in range(0, batch, step):
        idx = np.arange(s, min(batch, s + step))
        vals = objective(np.broadcast_to(grid, (idx.size,) + grid.shape), idx)
        best[idx] = grid[np.argmax(vals, axis=1)]
    all_idx = np.arange(batch)
    if dim == 2:
        centre = np.arctan2(best[:, 1], best[:, 0])
        delta = 2 * np.pi / n_grid
        lo, hi = centre - delta, centre + delta
        g = (math.sqrt(5) - 1) / 2

        def at(t):
            return objective(np.stack((np.cos(t), np.sin(t)), axis=-1)[:, None, :], all_idx)[:, 0]

        c, d = hi - g * (hi - lo), lo + g * (hi - lo)
        fc, fd = at(c), at(d)
        for _ in range(90):
            left = fc > fd
            hi = np.where(left, d, hi)
            lo = np.where(left, lo, c)
            c, d = hi - g * (hi - lo), lo + g * (hi - lo)
            fc, fd = at(c), at(d)
        t = 0.5 * (lo + hi)
        pts = np.stack((np.cos(t), np.sin(t)), axis=-1)
        return at(t), pts
    p = best.copy()
    fp = objective(p[:, None, :], all_idx)[:, 0]
    h = np.full(batch, 2.0 * math.sqrt(4 * math.pi / n_grid))
    for _ in range(400):
        active = h > 1e-12
        if not active.any():
            break
        e1, e2 = _tangent_basis(p)
        cand = p[:, None, :] + h[:, None, None] * np.stack((e1, -e1, e2, -e2), axis=1)
        cand /= np.linalg.norm(cand, axis=2, keepdims=True)
        fc = objective(cand, all_idx)
        k = np.argmax(fc, axis=1)
        fbest = fc[all_idx, k]
        better = active & (fbest > fp)
        p[better] = cand[all_idx, k][better]
        fp = np.where(better, fbest, fp)
        h = np.where(active & ~better, 0.5 * h, h)
    return fp, p


def polar_numeric(gauge, x, n_grid: int | None = None):
    """sup over xi != 0 of <x, xi> / gauge(xi), by search on the unit sphere."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])

    def obj(pts, idx):
        return np.einsum("bkn,bn->bk", pts, flat[idx]) / gauge(pts)

    vals, _ = maximize_on_sphere(obj, flat.shape[1], flat.shape[0], n_grid)
    vals = np.where(np.linalg.norm(flat, axis=1) > 0, vals, 0.0)
    return vals.reshape(x.shape[:-1])


def estimate_bounds(model: NormModel, samples: int = 4096):
    """Numerical (alpha, eta): min and max of F on the Euclidean unit sphere."""
    n = model.dimension
    if samples < 2 * n:
        raise InvalidParameter(f"need at least {2 * n} samples")
    hi, _ = maximize_on_sphere(lambda pts, idx: model.value(pts), n, 1, samples)
    lo, _ = maximize_on_sphere(lambda pts, idx: -model.value(pts), n, 1, samples)
    alpha, eta = float(-lo[0]), float(hi[0])
    if not alpha > 0:
        raise InvalidModel(f"F is not positive on the unit sphere (min {alpha:.3e})")
    return alpha, eta


# -- structural property suite -----------------------------------------------


def sample_points(dim: int, count: int, rng, log_span: float = 3.0):
    """Random vectors with isotropic directions and log-uniform magnitudes."""
    d = rng.normal(size=(count, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = np.exp(rng.uniform(-log_span, log_span, size=(count, 1)))
    return d * r


def involution_directions(dim: int, count: int | None = None):
    if dim == 2:
        count = count or 360
        th = 2 * np.pi * np.arange(count) / count
        return np.stack((np.cos(th), np.sin(th)), axis=-1)
    count = count or 500
    return fibonacci_sphere(count)


def verify_norm_properties(model: NormModel, samples: int = 1000, tol: float = 1e-6,
                           seed: int = 0, involution_count: int | None = None) -> CheckReport:
    """Check the structural identities linking F, DF, F°, ∇F° on random samples.

    Each entry of ``details["properties"]`` records the worst relative
    violation and the witness point. Property (ii) is reported with the
    measured constant C and never fails.
    """
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    rng = np.random.default_rng(seed)
    n = model.dimension
    x = sample_points(n, samples, rng)
    y = sample_points(n, samples, rng)
    F, Fo = model.value, model.polar
    props = {}

    def record(name, viol, pts, note=None):
        k = int(np.argmax(viol))
        entry = {"max_violation": float(viol[k]), "witness": pts[k].tolist(),
                 "pass": bool(viol[k] <= tol)}
        if note:
            entry["note"] = note
        props[name] = entry

    fx, fy, fxy = F(x), F(y), F(x + y)
    scale = fx + fy
    upper = (fxy - fx - fy) / scale
    # |F(x) - F(y)| <= F(x+y) only holds for symmetric F; the general form
    # pairs each term with the reversed gauge: F(x) - F̂(y) <= F(x+y)
    lower = np.maximum(fx - model.hat(y), fy - model.hat(x)) - fxy
    record("i_triangle", np.maximum(np.maximum(upper, lower / scale), 0.0),
           np.concatenate((x, y), axis=1))
    literal = np.maximum(np.abs(fx - fy) - fxy, 0.0) / scale
    props["i_triangle_literal"] = {
        "max_violation": float(literal.max()),
        "note": "|F(x)-F(y)| <= F(x+y); informational, holds only when F is even",
        "pass": True,
    }

    gF, gFo = model.gradient(x), model.polar_gradient(x)
    mags = np.concatenate((np.linalg.norm(gF, axis=1), np.linalg.norm(gFo, axis=1)))
    C = float(max(mags.max(), 1.0 / mags.min()))
    props["ii_gradient_bounds"] = {"measured_C": C, "pass": bool(np.isfinite(C)),
                                   "note": "1/C <= |∇F|, |∇F°| <= C"}

    fox = Fo(x)
    euler = np.maximum(np.abs(np.sum(x * gF, axis=1) - fx) / fx,
                       np.abs(np.sum(x * gFo, axis=1) - fox) / fox)
    record("iii_euler", euler, x)

    unit = np.maximum(np.abs(F(gFo) - 1.0), np.abs(Fo(gF) - 1.0))
    record("iv_unit_gradients", unit, x)

    recon = fox[:, None] * model.gradient(gFo)
    record("v_inverse_map", np.linalg.norm(recon - x, axis=1) / np.linalg.norm(x, axis=1), x)

    t = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=(samples, 1)))
    record("vi_zero_homogeneous", np.linalg.norm(model.gradient(t * x) - gF, axis=1), x)

    dirs = involution_directions(n, involution_count)
    bidual = polar_numeric(model.polar, dirs)
    record("polar_involution", np.abs(bidual / F(dirs) - 1.0), dirs)

    gated = [v for k, v in props.items() if "max_violation" in v and k != "i_triangle_literal"]
    worst = max(v["max_violation"] for v in gated)
    passed = all(v["pass"] for v in props.values())
    failed = [k for k, v in props.items() if not v["pass"]]
    return CheckReport("norm_properties", worst, 0.0, tol, worst, passed,
                       details={"norm": model.describe(), "samples": samples,
                                "properties": props, "failed": failed})
