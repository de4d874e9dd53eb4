"""Time integration of the continuous dynamics on the orthogonal group.

The Stratonovich equations are stepped with the Heun predictor-corrector.
Euler-Maruyama on the Ito form is kept as a cross-check. Every routine
accepts a stack of states ``(..., n, p)`` so ensembles run vectorised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NegativeEta, NonFiniteState, NotOnManifold, SingularState, UnknownPotential
from .linalg import apply4, orthogonality_defect
from .model import (
    ModelContext,
    f1_rhs,
    g_drift,
    ito_correction,
    noise_root,
    second_order_terms,
)
from .sga import SemigroupEstimate, get_test_function

BLOWUP = 1e6
KINDS = ("first_order", "generic", "unstable", "langevin")


@dataclass(frozen=True)
class Potential:
    name: str
    value: Callable
    grad: Callable


def make_potential(name: str, ctx: ModelContext | None = None, weights=None) -> Potential:
    """Potential from the registry: ``"zero"`` or ``"oja_brockett"``.

    ``oja_brockett`` is ``U(Q) = -tr(N Q^T A Q)`` with ``N = diag(weights)``
    (descending; defaults to ``n, n-1, ..., 1``).
    """
    if name == "zero":
        return Potential(
            "zero",
            lambda Q: np.zeros(np.shape(Q)[:-2]),
            lambda Q: np.zeros_like(Q),
        )
    if name == "oja_brockett":
        if ctx is None:
            raise UnknownPotential("oja_brockett needs a model context")
        A = ctx.A
        Nw = np.arange(ctx.n, 0, -1, dtype=float) if weights is None else np.asarray(weights, dtype=float)
        Nd = np.diag(Nw)

        def value(Q):
            return -np.einsum("...ij,ik,...kj,j->...", Q, A, Q, Nw)

        def grad(Q):
            return -2.0 * (A @ Q @ Nd)

        return Potential("oja_brockett", value, grad)
    raise UnknownPotential(f"unknown potential {name!r}")


def tangent_apply(W, X):
    """Apply the tangent projection at ``W`` to ``X``.

    Square ``W`` uses the tensor form ``(W W^T X - W X^T W) / 2``, which keeps
    ``W W^T`` invariant in continuous time even off the manifold; rectangular
    ``W`` uses ``(I - W W^T) X + W (W^T X - X^T W) / 2``.
    """
    Wt = np.swapaxes(W, -1, -2)
    n, p = W.shape[-2:]
    if n == p:
        return 0.5 * (W @ (Wt @ X) - W @ np.swapaxes(X, -1, -2) @ W)
    WtX = Wt @ X
    return X - W @ WtX + 0.5 * W @ (WtX - np.swapaxes(WtX, -1, -2))


@dataclass(frozen=True, eq=False)
class SdeModel:
    """One dynamics variant: drift, Stratonovich noise and retraction policy.

    ``first_order``: drift ``G(A, W)``, noise ``sqrt(eta) P N dB``.
    ``generic``: adds ``eta P F(W)`` to the drift, noise ``sqrt(eta) P H(W) dB``.
    ``unstable``: drift ``G + eta L``, noise ``sqrt(eta) N dB``.
    ``langevin``: drift ``-P grad U``, noise ``sigma P dB``.
    """

    kind: str
    ctx: ModelContext | None
    eta: float = 0.0
    retraction: bool = True
    F: Callable | None = None
    H: Callable | None = None
    potential: Potential | None = None
    sigma: float = 0.0
    fd_step: float = 1e-5
    _extra: dict = field(default_factory=dict, repr=False)

    def drift(self, W):
        if self.kind == "langevin":
            return -tangent_apply(W, self.potential.grad(W))
        G = g_drift(self.ctx.A, W)
        if self.kind == "first_order" or self.eta == 0.0:
            return G
        if self.kind == "generic":
            return G + self.eta * tangent_apply(W, self.F(W))
        _, L = second_order_terms(W, self.ctx, self.fd_step, manifold_tol=None)
        return G + self.eta * L

    def noise(self, W, dB):
        """Stratonovich noise increment ``b(W) . dB``."""
        if self.kind == "langevin":
            return self.sigma * tangent_apply(W, dB)
        if self.eta == 0.0:
            return np.zeros_like(W)
        root = np.sqrt(self.eta)
        if self.kind == "generic":
            return root * tangent_apply(W, apply4(self.H(W), dB))
        NdB = apply4(noise_root(W, self.ctx), dB)
        if self.kind == "unstable":
            return root * NdB
        return root * tangent_apply(W, NdB)

    def ito_drift(self, W):
        if self.kind == "langevin":
            n = W.shape[-1]
            return self.drift(W) - 0.25 * self.sigma**2 * (n - 1) * W
        if self.kind not in ("first_order", "generic"):
            raise ValueError(f"Ito form is not provided for kind {self.kind!r}")
        base = self.drift(W)
        if self.eta == 0.0:
            return base
        if self.kind == "generic":
            raise ValueError("Ito correction for generic H is not provided")
        return base + 0.5 * self.eta * ito_correction(W, self.ctx, self.fd_step)

    @property
    def noise_free(self) -> bool:
        return self.sigma == 0.0 if self.kind == "langevin" else self.eta == 0.0


def make_sde_model(kind: str, ctx: ModelContext | None, eta: float = 0.0, retraction: bool = True, **params) -> SdeModel:
    if kind not in KINDS:
        raise ValueError(f"unknown SDE kind {kind!r}; expected one of {KINDS}")
    if eta < 0:
        raise NegativeEta(f"eta must be >= 0, got {eta}")
    if kind == "langevin":
        pot = params.pop("potential", "zero")
        if isinstance(pot, str):
            pot = make_potential(pot, ctx, params.pop("weights", None))
        return SdeModel(kind, ctx, 0.0, retraction, potential=pot, sigma=float(params.pop("sigma", 0.0)), **params)
    if kind == "generic" and (params.get("F") is None or params.get("H") is None):
        raise ValueError("generic model needs F and H callables")
    return SdeModel(kind, ctx, float(eta), retraction, **params)


def retraction(W):
    """Polar factor ``W (W^T W)^{-1/2}``: the closest matrix with orthonormal columns."""
    W = np.asarray(W, dtype=float)
    lam, V = np.linalg.eigh(np.swapaxes(W, -1, -2) @ W)
    if np.any(lam <= 1e-14 * np.maximum(1.0, lam[..., -1:])):
        raise SingularState("state is singular; trajectory has blown up")
    inv_root = (V / np.sqrt(lam)[..., None, :]) @ np.swapaxes(V, -1, -2)
    return W @ inv_root


def _guard(W):
    if not np.all(np.isfinite(W)) or np.any(np.abs(W) > BLOWUP):
        raise NonFiniteState("state left the finite range (|w| > 1e6 or NaN)")
    return W


def sde_step(model: SdeModel, W, dt: float, dB):
    """One Stratonovich Heun step (predictor-corrector), then optional retraction."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    a0 = model.drift(W)
    b0 = model.noise(W, dB)
    Wp = W + a0 * dt + b0
    a1 = model.drift(Wp)
    b1 = model.noise(Wp, dB)
    Wn = _guard(W + 0.5 * (a0 + a1) * dt + 0.5 * (b0 + b1))
    return retraction(Wn) if model.retraction else Wn


def ito_step(model: SdeModel, W, dt: float, dB, manifold_tol: float = 1e-6):
    """Euler-Maruyama step on the Ito form (drift plus ``eta J / 2``)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if model.kind != "langevin" and not model.noise_free:
        defect = orthogonality_defect(W)
        if np.any(defect > manifold_tol):
            raise NotOnManifold(f"Ito step needs W on O(n); defect {np.max(defect):.3e}")
    Wn = _guard(W + model.ito_drift(W) * dt + model.noise(W, dB))
    return retraction(Wn) if model.retraction else Wn


def ode_rk4_step(W, dt: float, ctx: ModelContext, retract: bool = False):
    """Classical RK4 step on ``dW/dt = W Sigma(A, W)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = f1_rhs(W, ctx)
    k2 = f1_rhs(W + 0.5 * dt * k1, ctx)
    k3 = f1_rhs(W + 0.5 * dt * k2, ctx)
    k4 = f1_rhs(W + dt * k3, ctx)
    Wn = _guard(W + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
    return retraction(Wn) if retract else Wn


def drift_rk4_step(model: SdeModel, W, dt: float):
    """Classical RK4 step on the noise-free dynamics ``dW = drift(W) dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = model.drift(W)
    k2 = model.drift(W + 0.5 * dt * k1)
    k3 = model.drift(W + 0.5 * dt * k2)
    k4 = model.drift(W + dt * k3)
    Wn = _guard(W + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
    return retraction(Wn) if model.retraction else Wn


def integrate_ode(W0, T: float, dt: float, ctx: ModelContext, retract: bool = False):
    n_steps = _n_steps(T, dt)
    W = np.array(W0, dtype=float)
    for _ in range(n_steps):
        W = ode_rk4_step(W, dt, ctx, retract)
    return W


def _n_steps(T, dt):
    m = T / dt
    n = int(round(m))
    if abs(m - n) > 1e-9 * max(1.0, m):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return n


@dataclass
class Path:
    """Stored points of a (batched) trajectory; ``defect`` is ``||W^T W - I||_F``."""

    t: np.ndarray
    W: np.ndarray
    defect: np.ndarray


def simulate(model: SdeModel, W0, T: float, dt: float, rng: np.random.Generator,
             store_every: int | None = None, scheme: str = "heun", dB_source=None):
    """Integrate from ``W0`` (single state or stack) to time ``T``.

    Returns the terminal state, or a :class:`Path` when ``store_every`` is set.
    ``dB_source(k, shape)`` overrides the Brownian increments (used to couple
    integrations driven by one path).
    """
    n_steps = _n_steps(T, dt)
    W = np.array(W0, dtype=float)
    if scheme == "rk4":
        if not model.noise_free:
            raise ValueError("rk4 is only for noise-free models")
        step = lambda m, W, dt, dB: drift_rk4_step(m, W, dt)  # noqa: E731
    elif scheme == "heun":
        step = sde_step
    elif scheme == "ito":
        step = ito_step
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    sqdt = np.sqrt(dt)
    ts, Ws, ds = [], [], []
    if store_every:
        ts.append(0.0)
        Ws.append(W.copy())
        ds.append(orthogonality_defect(W))
    for k in range(n_steps):
        if dB_source is not None:
            dB = dB_source(k, W.shape)
        elif model.noise_free:
            dB = np.zeros_like(W)
        else:
            dB = sqdt * rng.standard_normal(W.shape)
        W = step(model, W, dt, dB)
        if store_every and ((k + 1) % store_every == 0 or k + 1 == n_steps):
            ts.append((k + 1) * dt)
            Ws.append(W.copy())
            ds.append(orthogonality_defect(W))
    if store_every:
        return Path(np.array(ts), np.stack(Ws), np.stack(ds))
    return W


def feynman_kac_estimate(phi, W0, t: float, model: SdeModel, dt: float, n_mc: int,
                         rng: np.random.Generator, chunk: int = 1 << 14):
    """Monte Carlo ``u(W0, t) = E[phi(X(t)) | X(0) = W0]`` over Heun paths.

    Retraction follows the model's policy (on by default).
    """
    if isinstance(phi, str):
        phi = get_test_function(phi)
    phi_id = getattr(phi, "name", getattr(phi, "__name__", "phi"))
    W0 = np.array(W0, dtype=float)
    n_steps = 0 if t == 0 else _n_steps(t, dt)
    if n_steps == 0:
        return SemigroupEstimate(float(phi(W0)), 0.0, n_mc, 0, phi_id)
    if n_mc < 2:
        raise ValueError("n_mc must be >= 2")
    vals = []
    done = 0
    while done < n_mc:
        b = min(chunk, n_mc - done)
        W = simulate(model, np.broadcast_to(W0, (b,) + W0.shape), t, dt, rng)
        vals.append(np.asarray(phi(W), dtype=float))
        done += b
    v = np.concatenate(vals)
    return SemigroupEstimate(float(v.mean()), float(v.std(ddof=1) / np.sqrt(n_mc)), n_mc, n_steps, phi_id)
