"""Oja's stochastic gradient ascent as a Markov chain.

One step is ``W <- W + eta G(x x^T, W)`` for a fresh sample ``x``. The
trajectory routine monitors the Frobenius growth bound
``||W_k||^2 <= (1 + (2 M^2 + 1) eta) ||W_{k-1}||^2`` where ``M`` bounds ``|x|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimMismatch, StabilityViolation
from .model import ModelContext


@dataclass(frozen=True)
class SgaState:
    W: np.ndarray
    step_index: int
    eta: float
    fro_norm_sq: float

    @classmethod
    def start(cls, W0, eta: float) -> "SgaState":
        W0 = np.array(W0, dtype=float)
        return cls(W0, 0, float(eta), float(np.sum(W0 * W0)))


@dataclass(frozen=True)
class SemigroupEstimate:
    value: float
    stderr: float
    n_mc: int
    k: int
    phi_id: str


def g_rank_one(x, W):
    """``G(x x^T, W)`` without forming ``x x^T`` (batch-aware)."""
    x = np.asarray(x, dtype=float)
    W = np.asarray(W, dtype=float)
    if x.shape[-1] != W.shape[-2]:
        raise DimMismatch(f"x has length {x.shape[-1]}, W has {W.shape[-2]} rows")
    xW = np.einsum("...i,...ij->...j", x, W)
    S = xW[..., :, None] * xW[..., None, :]
    skew = np.tril(S, -1) - np.triu(S, 1)
    return x[..., :, None] * xW[..., None, :] - W @ S + W @ skew


def sga_step(state: SgaState, x) -> SgaState:
    """One iteration of the chain; deterministic given the state and sample."""
    W = state.W + state.eta * g_rank_one(x, state.W)
    return SgaState(W, state.step_index + 1, state.eta, float(np.sum(W * W)))


def sga_step_batch(W, x, eta: float):
    """Vectorised step for a stack of states ``W`` and samples ``x``."""
    return W + eta * g_rank_one(x, W)


@dataclass
class SgaTrajectory:
    """Result of :func:`sga_trajectory`.

    ``norms_sq[k]`` is ``||W_k||_F^2`` for every stored path; ``violations``
    lists ``(step, path)`` pairs that broke the per-step or global bound.
    """

    W: np.ndarray
    norms_sq: np.ndarray
    violations: list
    step_factor: float
    global_bound: float


def stability_bounds(ctx: ModelContext, eta: float, r: float, T: float):
    """Per-step factor ``1 + (2 M^2 + 1) eta`` and global bound ``r^2 exp(T (2 M^2 + 1))``."""
    K = 2.0 * ctx.bound**2 + 1.0
    return 1.0 + K * eta, r * r * np.exp(T * K)


def sga_trajectory(W0, ctx: ModelContext, eta: float, k_max: int, rng: np.random.Generator,
                   n_paths: int | None = None, r: float | None = None, T: float | None = None,
                   raise_on_violation: bool = True, rel_tol: float = 1e-12) -> SgaTrajectory:
    """Run ``k_max`` steps from ``W0`` (``n_paths`` independent copies if given).

    ``r`` defaults to ``||W0||_F`` and ``T`` to ``k_max * eta``. Any step with
    ``||W_k||^2 > (1 + (2 M^2 + 1) eta) ||W_{k-1}||^2`` or beyond the global
    bound is a violation; the first one raises :class:`StabilityViolation`
    unless ``raise_on_violation`` is false.
    """
    if eta < 0:
        raise ValueError("eta must be >= 0")
    W = np.array(W0, dtype=float)
    if n_paths is not None:
        W = np.broadcast_to(W, (n_paths,) + W.shape).copy()
    r = float(np.sqrt(np.max(np.sum(W * W, axis=(-2, -1))))) if r is None else float(r)
    T = k_max * eta if T is None else float(T)
    factor, bound = stability_bounds(ctx, eta, r, T)
    norms = [np.sum(W * W, axis=(-2, -1))]
    violations = []
    for k in range(1, k_max + 1):
        x = ctx.dist.sample(rng, W.shape[:-2] if W.ndim > 2 else 1)
        if W.ndim == 2:
            x = x[0]
        W = sga_step_batch(W, x, eta)
        nk = np.sum(W * W, axis=(-2, -1))
        bad = (nk > factor * norms[-1] * (1 + rel_tol)) | (nk > bound * (1 + rel_tol))
        if np.any(bad):
            paths = np.flatnonzero(np.atleast_1d(bad))
            violations.extend((k, int(p)) for p in paths)
            if raise_on_violation:
                raise StabilityViolation(
                    f"Frobenius bound violated at step {k} (path {int(paths[0])})",
                    step=k, path=int(paths[0]))
        norms.append(nk)
    return SgaTrajectory(W, np.stack(norms), violations, factor, bound)


@dataclass(frozen=True)
class PhiSpec:
    """Named test function ``phi``; ``sup`` is ``sup |phi|`` when bounded."""

    name: str
    fn: Callable
    sup: float | None = None

    def __call__(self, W):
        return self.fn(np.asarray(W))


PHI_REGISTRY = {
    "one": PhiSpec("one", lambda W: np.ones(W.shape[:-2]), 1.0),
    "w11": PhiSpec("w11", lambda W: W[..., 0, 0]),
    "w12": PhiSpec("w12", lambda W: W[..., 0, 1]),
    "w11_clip": PhiSpec("w11_clip", lambda W: np.clip(W[..., 0, 0], -1.0, 1.0), 1.0),
    "w11_tanh": PhiSpec("w11_tanh", lambda W: np.tanh(W[..., 0, 0]), 1.0),
    "w11_w22": PhiSpec("w11_w22", lambda W: W[..., 0, 0] * W[..., -1, -1]),
    "w11_sq": PhiSpec("w11_sq", lambda W: W[..., 0, 0] ** 2),
}


def get_test_function(phi_id: str) -> PhiSpec:
    try:
        return PHI_REGISTRY[phi_id]
    except KeyError:
        raise KeyError(f"unknown test function {phi_id!r}; known: {sorted(PHI_REGISTRY)}") from None


def semigroup_estimate(phi, W0, k: int, eta: float, ctx: ModelContext, n_mc: int,
                       rng: np.random.Generator, chunk: int = 1 << 16) -> SemigroupEstimate:
    """Monte Carlo estimate of ``E[phi(W_k) | W_0 = W0]`` with its standard error."""
    if isinstance(phi, str):
        phi = get_test_function(phi)
    phi_id = getattr(phi, "name", getattr(phi, "__name__", "phi"))
    W0 = np.array(W0, dtype=float)
    if k == 0:
        return SemigroupEstimate(float(phi(W0)), 0.0, n_mc, 0, phi_id)
    if n_mc < 2:
        raise ValueError("n_mc must be >= 2")
    total, total_sq, done = 0.0, 0.0, 0
    while done < n_mc:
        b = min(chunk, n_mc - done)
        W = np.broadcast_to(W0, (b,) + W0.shape).copy()
        for _ in range(k):
            W = sga_step_batch(W, ctx.dist.sample(rng, b), eta)
        v = np.asarray(phi(W), dtype=float)
        total += v.sum()
        total_sq += (v * v).sum()
        done += b
    mean = total / n_mc
    var = max(total_sq / n_mc - mean * mean, 0.0) * n_mc / (n_mc - 1)
    return SemigroupEstimate(float(mean), float(np.sqrt(var / n_mc)), n_mc, k, phi_id)

