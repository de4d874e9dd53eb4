"""The two-dimensional reduction: rotation angle dynamics on O(2).

For ``W = O1(theta) = [[cos, sin], [-sin, cos]]`` the first-order SDE reduces to
a scalar Ito equation ``d theta = f dt + sqrt(eta) g dB`` with ``g = -c(theta)``
where ``c(theta)^2 = E[b^2]`` and ``b = w1^T (x x^T - A) w2``. This module
evaluates ``f`` and ``g``, steps the angle SDE, computes the stationary
density and solves the periodic Fokker-Planck and backward equations on a grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import (
    CflViolation,
    InsufficientData,
    NoiseDegenerate,
    NotPeriodic,
    WrongDimension,
    ZeroDensityCell,
)
from .model import Distribution, ModelContext, sigma

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Angle2dModel:
    """Coefficients of the angle SDE.

    ``c(theta)^2 = c1 (cos^4 + sin^4) + c2 cos^2 sin^2 + c3 cos sin (cos^2 - sin^2)``.
    """

    c1: float
    c2: float
    c3: float
    A: np.ndarray
    eta: float

    def c_squared(self, theta):
        c, s = np.cos(theta), np.sin(theta)
        return self.c1 * (c**4 + s**4) + self.c2 * c * c * s * s + self.c3 * c * s * (c * c - s * s)


def c_coeffs(ctx: ModelContext):
    """Moment combinations ``(c1, c2, c3)`` of the n=2 noise amplitude.

    ``c3`` carries a factor 2 on both mean products:
    ``2E[x1^3 x2 - x1 x2^3] - 2E[x1^2]E[x1 x2] + 2E[x2^2]E[x1 x2]``, which is
    what ``E[b^2]`` expands to.
    """
    if ctx.n != 2:
        raise WrongDimension(f"the angle reduction needs n=2, got n={ctx.n}")
    A, T = ctx.A, ctx.T4
    e11, e22, e12 = A[0, 0], A[1, 1], A[0, 1]
    c1 = T[0, 0, 1, 1] - e12**2
    c2 = (T[0, 0, 0, 0] + T[1, 1, 1, 1] - 4 * T[0, 0, 1, 1]
          + 2 * e12**2 + 2 * e11 * e22 - e11**2 - e22**2)
    c3 = 2 * (T[0, 0, 0, 1] - T[0, 1, 1, 1]) - 2 * e11 * e12 + 2 * e22 * e12
    return float(c1), float(c2), float(c3)


def make_angle_model(ctx: ModelContext, eta: float) -> Angle2dModel:
    c1, c2, c3 = c_coeffs(ctx)
    return Angle2dModel(c1, c2, c3, np.array(ctx.A, dtype=float), float(eta))


def eb2_quadrature(theta, dist: Distribution, nodes: int = 6):
    """``E[(w1^T (x x^T - A) w2)^2]`` at ``O1(theta)`` by direct quadrature over ``dist``.

    Independent of the moment tensors: finite laws are enumerated and
    product-uniform laws use a tensor Gauss-Legendre rule (exact for the
    quartic integrand).
    """
    if dist.dim != 2:
        raise WrongDimension("quadrature oracle is for n=2")
    if dist.kind == "finite":
        X, wts = np.asarray(dist.atoms, float), np.asarray(dist.weights, float)
    else:
        g, gw = np.polynomial.legendre.leggauss(nodes)
        h1, h2 = dist.half_widths
        x1, x2 = np.meshgrid(h1 * g, h2 * g, indexing="ij")
        X = np.stack([x1.ravel(), x2.ravel()], axis=1)
        wts = np.outer(gw, gw).ravel() / 4.0
    A = np.einsum("k,ki,kj->ij", wts, X, X)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    c, s = np.cos(th), np.sin(th)
    w1 = np.stack([c, -s], axis=-1)
    w2 = np.stack([s, c], axis=-1)
    b = (X @ w1.T) * (X @ w2.T) - np.einsum("ti,ij,tj->t", w1, A, w2)
    out = wts @ b**2
    return out if np.ndim(theta) else float(out[0])


def f_g_eval(theta, model: Angle2dModel):
    """Drift ``f`` and diffusion ``g`` of the Ito angle SDE.

    ``f = -a + eta (c2 - 2 c1)/2 cos sin (cos^2 - sin^2) + eta c3/4 cos(4 theta)``
    with ``a = (A11 - A22) cos sin + A12 (cos^2 - sin^2)``; ``g = -c(theta)``.
    The eta terms are the Ito correction ``(eta/4) d(g^2)/d theta``.
    """
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    A = model.A
    a = (A[0, 0] - A[1, 1]) * c * s + A[0, 1] * (c * c - s * s)
    f = (-a + 0.5 * model.eta * (model.c2 - 2 * model.c1) * c * s * (c * c - s * s)
         + 0.25 * model.eta * model.c3 * np.cos(4 * theta))
    g = -np.sqrt(np.clip(model.c_squared(theta), 0.0, None))
    return f, g


def dc_squared(theta, model: Angle2dModel):
    """``d c(theta)^2 / d theta``."""
    c, s = np.cos(theta), np.sin(theta)
    return (2 * model.c2 - 4 * model.c1) * c * s * (c * c - s * s) + model.c3 * np.cos(4 * theta)


def angle_sde_step(theta, dt: float, dB, model: Angle2dModel, scheme: str = "em"):
    """One step of the angle SDE, wrapped to ``[0, 2 pi)``.

    ``scheme="em"`` is Euler-Maruyama. ``"milstein"`` adds
    ``eta g g' (dB^2 - dt) / 2`` and converges strongly at order 1.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    f, g = f_g_eval(theta, model)
    out = theta + f * dt + np.sqrt(model.eta) * g * dB
    if scheme == "milstein":
        out = out + 0.25 * model.eta * dc_squared(theta, model) * (dB * dB - dt)
    elif scheme != "em":
        raise ValueError(f"unknown scheme {scheme!r}")
    return np.mod(out, TWO_PI)


def lift_angle(theta):
    """``O1(theta) = [[cos, sin], [-sin, cos]]`` (vectorised over theta)."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def angle_of(W):
    """Inverse of :func:`lift_angle` on SO(2), in ``[0, 2 pi)``."""
    W = np.asarray(W)
    return np.mod(np.arctan2(W[..., 0, 1], W[..., 0, 0]), TWO_PI)


_ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def _c_of_W(W, model: Angle2dModel):
    w11, w12, w21, w22 = W[..., 0, 0], W[..., 0, 1], W[..., 1, 0], W[..., 1, 1]
    c2 = (model.c1 * (w11**4 + w12**4) + model.c2 * w11**2 * w12**2
          + model.c3 * w11 * w12 * (w11 * w22 + w12 * w21))
    return np.sqrt(np.clip(c2, 0.0, None))


def _reform_drift(W, model):
    return W @ sigma(model.A, W)


def _reform_noise(W, model, dB):
    return (np.sqrt(model.eta) * _c_of_W(W, model) * np.asarray(dB))[..., None, None] * (W @ _ROT)


def coupled_consistency(theta0, dB, dt: float, T: float, model: Angle2dModel, scheme: str = "milstein"):
    """Couple the matrix form ``dW = F1 dt + sqrt(eta) c(W) W o dZ`` with the angle SDE.

    ``dB`` holds the scalar Brownian increments, shape ``(n_steps,)`` or
    ``(n_steps, n_paths)``. The matrix equation is stepped by Stratonovich
    Heun and the angle by ``scheme`` (see :func:`angle_sde_step`) on the same
    increments. Euler-Maruyama couples only at strong order 1/2, Milstein at
    order 1. Returns the per-path maximum over time of
    ``|w11 - cos theta| + |w12 - sin theta|``.
    """
    dB = np.asarray(dB, dtype=float)
    n_steps = int(round(T / dt))
    if dB.shape[0] < n_steps:
        raise ValueError(f"need {n_steps} increments, got {dB.shape[0]}")
    batch = dB.shape[1:]
    theta = np.broadcast_to(np.asarray(theta0, dtype=float), batch).copy()
    W = lift_angle(theta)
    dev = np.zeros(batch)
    for k in range(n_steps):
        db = dB[k]
        a0, b0 = _reform_drift(W, model), _reform_noise(W, model, db)
        Wp = W + a0 * dt + b0
        a1, b1 = _reform_drift(Wp, model), _reform_noise(Wp, model, db)
        W = W + 0.5 * (a0 + a1) * dt + 0.5 * (b0 + b1)
        theta = angle_sde_step(theta, dt, db, model, scheme)
        d = np.abs(W[..., 0, 0] - np.cos(theta)) + np.abs(W[..., 0, 1] - np.sin(theta))
        dev = np.maximum(dev, d)
    return dev


@dataclass
class DensityGrid:
    """Cell values on the uniform periodic grid ``theta_i = i * 2 pi / m``.

    Cell ``i`` covers ``[theta_i - h/2, theta_i + h/2)`` with ``h = 2 pi / m``.
    """

    values: np.ndarray

    @property
    def m(self) -> int:
        return len(self.values)

    @property
    def width(self) -> float:
        return TWO_PI / self.m

    @property
    def centers(self) -> np.ndarray:
        return np.arange(self.m) * self.width

    def mass(self) -> float:
        return float(np.sum(self.values) * self.width)

    def normalized(self) -> "DensityGrid":
        return DensityGrid(self.values / self.mass())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "value"])
            for t, v in zip(self.centers, self.values):
                w.writerow([f"{t:.17g}", f"{v:.17g}"])

    @classmethod
    def uniform(cls, m: int) -> "DensityGrid":
        return cls(np.full(m, 1.0 / TWO_PI))


def grid_index(theta, m: int):
    """Cell index of each angle for the :class:`DensityGrid` layout."""
    h = TWO_PI / m
    return np.floor(np.mod(np.asarray(theta) + 0.5 * h, TWO_PI) / h).astype(np.int64) % m


def angle_histogram(theta, m: int) -> DensityGrid:
    counts = np.bincount(grid_index(theta, m), minlength=m).astype(float)
    return DensityGrid(counts / (counts.sum() * TWO_PI / m))


def total_variation(p: DensityGrid, q: DensityGrid) -> float:
    if p.m != q.m:
        raise ValueError("grids differ")
    return 0.5 * float(np.sum(np.abs(p.values - q.values)) * p.width)


def _cumulative_simpson(fun, m: int):
    """Integrals of ``fun`` from 0 to each grid node, plus the full period."""
    h = TWO_PI / m
    nodes = np.arange(m + 1) * h
    left, mid = fun(nodes), fun(nodes[:-1] + 0.5 * h)
    cells = h / 6.0 * (left[:-1] + 4.0 * mid + left[1:])
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    return cum[:-1], cum[-1], float(np.sum(np.abs(cells)))


def invariant_density(model: Angle2dModel, grid_m: int = 512, period_tol: float = 1e-8) -> DensityGrid:
    """Stationary density of the angle SDE.

    Zero probability flux gives ``rho ∝ exp(int 2 f / (eta g^2)) / g^2``;
    the integral uses cell-wise Simpson and the result is normalised on the
    grid. Raises :class:`NoiseDegenerate` if ``g^2`` vanishes anywhere on the
    grid and :class:`NotPeriodic` if the period integral is nonzero.
    """
    if model.eta <= 0:
        raise NoiseDegenerate("eta must be positive for a stationary density")
    fine = np.arange(2 * grid_m) * (np.pi / grid_m)
    g2 = model.c_squared(fine)
    if np.min(g2) <= 1e-14 * max(1.0, np.max(np.abs(g2))):
        raise NoiseDegenerate(f"g^2 vanishes on the grid (min {np.min(g2):.3e})")

    def integrand(t):
        f, g = f_g_eval(t, model)
        return 2.0 * f / (model.eta * g * g)

    cum, period, scale = _cumulative_simpson(integrand, grid_m)
    if abs(period) > period_tol * max(1.0, scale):
        raise NotPeriodic(f"period integral {period:.3e} is not zero")
    centers = np.arange(grid_m) * (TWO_PI / grid_m)
    logr = cum - np.log(model.c_squared(centers))
    return DensityGrid(np.exp(logr - logr.max())).normalized()


def gibbs_angle_density(potential, sigma_: float, grid_m: int = 512) -> DensityGrid:
    """``exp(-2 U(O1(theta)) / sigma^2)`` on the grid, normalised."""
    if sigma_ <= 0:
        raise NoiseDegenerate("sigma must be positive")
    centers = np.arange(grid_m) * (TWO_PI / grid_m)
    e = -2.0 * potential.value(lift_angle(centers)) / sigma_**2
    return DensityGrid(np.exp(e - e.max())).normalized()


def cfl_limit(model: Angle2dModel, m: int) -> float:
    h = TWO_PI / m
    t = (np.arange(4 * m) + 0.5) * (TWO_PI / (4 * m))
    f, g = f_g_eval(t, model)
    lim_d = h * h / max(model.eta * np.max(g * g), 1e-300)
    lim_a = h / max(np.max(np.abs(f)), 1e-300)
    return 0.4 * min(lim_d, lim_a)


@dataclass
class FpResult:
    times: np.ndarray
    densities: list
    max_mass_change: float

    @property
    def final(self) -> DensityGrid:
        return self.densities[-1]


def _bernoulli(z):
    """``z / (exp(z) - 1)`` with the removable singularity filled in."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    big = np.abs(z) > 1e-8
    out[big] = z[big] / np.expm1(z[big])
    small = ~big
    out[small] = 1.0 - 0.5 * z[small]
    return out


def fp_solve(rho0: DensityGrid, model: Angle2dModel, dt: float, T: float,
             store_every: int | None = None, flux: str = "sg") -> FpResult:
    """Explicit finite-volume solve of ``rho_t = -(f rho)' + (eta g^2 rho)''/2`` on the circle.

    ``flux="upwind"``: drift flux by first-order upwinding at cell faces and
    diffusion flux by centred differences of ``eta g^2 rho``.
    ``flux="sg"``: Scharfetter-Gummel (exponentially fitted) flux, which is
    upwinding at large cell Peclet number and centred at small, so the
    stationary error is second order in the cell width. Both are conservative
    and positivity preserving under the CFL bound. The last step is shortened
    to land on ``T``.
    """
    m = rho0.m
    h = rho0.width
    if dt > cfl_limit(model, m) * (1 + 1e-12):
        raise CflViolation(f"dt={dt:g} exceeds the stability limit {cfl_limit(model, m):.3e}")
    centers = rho0.centers
    f_face, _ = f_g_eval(centers + 0.5 * h, model)
    _, g_c = f_g_eval(centers, model)
    D = model.eta * g_c**2
    fp, fm = np.maximum(f_face, 0.0), np.minimum(f_face, 0.0)
    if flux == "sg":
        z = 2.0 * f_face * h / (model.eta * model.c_squared(centers + 0.5 * h))
        b_minus, b_plus = _bernoulli(-z), _bernoulli(z)
    elif flux != "upwind":
        raise ValueError(f"unknown flux {flux!r}")
    rho = np.array(rho0.values, dtype=float)
    n_steps = int(np.ceil(T / dt - 1e-12))
    times, dens = [0.0], [DensityGrid(rho.copy())]
    max_change = 0.0
    t = 0.0
    for k in range(n_steps):
        step = min(dt, T - t)
        q = D * rho
        if flux == "sg":
            F = (b_minus * q - b_plus * np.roll(q, -1)) / (2.0 * h)
        else:
            F = fp * rho + fm * np.roll(rho, -1) - 0.5 * (np.roll(q, -1) - q) / h
        new = rho - step / h * (F - np.roll(F, 1))
        max_change = max(max_change, abs(new.sum() - rho.sum()) * h)
        rho = new
        t = T if k == n_steps - 1 else t + step
        if store_every and ((k + 1) % store_every == 0 or k == n_steps - 1):
            times.append(t)
            dens.append(DensityGrid(rho.copy()))
    if not store_every:
        times.append(T)
        dens.append(DensityGrid(rho.copy()))
    return FpResult(np.array(times), dens, max_change)


def backward_generator(model: Angle2dModel, m: int, theta0: float = 0.0):
    """Centred-difference generator ``f u' + eta g^2 u''/2`` on the shifted grid ``theta0 + i h``."""
    h = TWO_PI / m
    th = theta0 + np.arange(m) * h
    f, g = f_g_eval(th, model)
    D = 0.5 * model.eta * g * g
    lo = D / h**2 - f / (2 * h)
    hi = D / h**2 + f / (2 * h)
    idx = np.arange(m)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([idx, (idx - 1) % m, (idx + 1) % m])
    vals = np.concatenate([-2 * D / h**2, lo, hi])
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m)), th


def backward_expectation(phi_theta, theta0: float, t: float, model: Angle2dModel, m: int = 1024) -> float:
    """``E[phi(theta(t)) | theta(0) = theta0]`` from the angle backward equation.

    ``phi_theta`` maps angles to values. The grid is shifted so ``theta0`` is a
    node; time stepping is the exact exponential of the semi-discrete operator.
    """
    L, th = backward_generator(model, m, theta0)
    u0 = np.asarray(phi_theta(th), dtype=float)
    if t == 0:
        return float(u0[0])
    return float(expm_multiply(t * L, u0)[0])


def weighted_l2_distance(rho: DensityGrid, rho_inf: DensityGrid) -> float:
    """``sqrt(sum (rho - rho_inf)^2 / rho_inf * h)``."""
    if rho.m != rho_inf.m:
        raise ValueError("grids differ")
    if np.any(rho_inf.values <= 0):
        raise ZeroDensityCell("reference density has a non-positive cell")
    d = rho.values - rho_inf.values
    return float(np.sqrt(np.sum(d * d / rho_inf.values) * rho.width))


def decay_rate_fit(times, distances, floor: float = 0.0):
    """Least-squares fit of ``log d = b - rate * t``.

    Only points with ``d > 100 * floor`` enter the fit. Returns
    ``(rate, r_squared)``.
    """
    t = np.asarray(times, dtype=float)
    d = np.asarray(distances, dtype=float)
    if t.size < 10 or t.size != d.size:
        raise InsufficientData(f"need >= 10 samples, got {t.size}")
    if np.any(d <= 0):
        raise InsufficientData("distances must be positive")
    keep = d > 100.0 * floor
    if keep.sum() < 10:
        raise InsufficientData("fewer than 10 samples above the solver floor")
    t, y = t[keep], np.log(d[keep])
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - np.sum(resid**2) / ss_tot
    return float(-slope), float(r2)
