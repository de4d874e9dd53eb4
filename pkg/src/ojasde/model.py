"""Model objects of Oja's SGA iteration and its diffusion approximations.

Covers the sample law with exact moments, the skew part ``Sigma`` and the
drift ``G``, tangent projections on ``O(n)`` and ``O(n x p)``, the noise
covariance tensor ``M`` with its square root ``N``, and the second-order
quantities ``J`` (Ito correction) and ``L`` (candidate second-order drift).

All matrix functions broadcast over leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import (
    ColumnsNotOrthonormal,
    ConfigError,
    DimMismatch,
    NonSquare,
    NonZeroMean,
    NotOnManifold,
    UnboundedSupport,
)
from .linalg import apply4, compose4, fd_derivative, flatten4, orthogonality_defect, psd_sqrt, sym_eig, unflatten4

MEAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Distribution:
    """Bounded, mean-zero law of the sample vector ``x``.

    Use :meth:`finite` for a discrete law on atoms or :meth:`product_uniform`
    for independent ``Uni(-h_a, h_a)`` coordinates.
    """

    kind: str
    dim: int
    atoms: np.ndarray | None = None
    weights: np.ndarray | None = None
    half_widths: np.ndarray | None = None

    @classmethod
    def finite(cls, atoms, weights=None) -> "Distribution":
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        m, n = atoms.shape
        w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (m,):
            raise ConfigError("weights must have one entry per atom")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigError("weights must be nonnegative and sum to 1")
        if not np.all(np.isfinite(atoms)):
            raise UnboundedSupport("atoms must be finite")
        mean = w @ atoms
        if np.linalg.norm(mean) > MEAN_TOL:
            raise NonZeroMean(f"mean {mean} is not zero")
        return cls("finite", n, atoms=atoms, weights=w)

    @classmethod
    def product_uniform(cls, half_widths) -> "Distribution":
        h = np.atleast_1d(np.asarray(half_widths, dtype=float))
        if not np.all(np.isfinite(h)):
            raise UnboundedSupport("half-widths must be finite")
        if np.any(h < 0):
            raise ConfigError("half-widths must be nonnegative")
        return cls("product_uniform", h.size, half_widths=h)

    @property
    def bound(self) -> float:
        """``sup ||x||_2`` over the support."""
        if self.kind == "finite":
            support = self.atoms[self.weights > 0]
            return float(np.max(np.linalg.norm(support, axis=1)))
        return float(np.linalg.norm(self.half_widths))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        size = tuple(np.atleast_1d(size))
        if self.kind == "finite":
            idx = rng.choice(len(self.weights), size=size, p=self.weights)
            return self.atoms[idx]
        u = rng.random(size + (self.dim,))
        return (2.0 * u - 1.0) * self.half_widths

    def to_dict(self) -> dict:
        if self.kind == "finite":
            return {"kind": "finite", "atoms": self.atoms.tolist(), "weights": self.weights.tolist()}
        return {"kind": "product_uniform", "half_widths": self.half_widths.tolist()}


@dataclass(frozen=True, eq=False)
class ModelContext:
    dist: Distribution
    A: np.ndarray
    T4: np.ndarray
    n: int
    _centered: np.ndarray = field(repr=False, default=None)

    @property
    def bound(self) -> float:
        return self.dist.bound

    @property
    def centered_moments(self) -> np.ndarray:
        """``T4_abcd - A_ab A_cd`` flattened to ``(n*n, n*n)``."""
        return self._centered

    def eigenvalues(self) -> np.ndarray:
        return sym_eig(self.A).eigenvalues

    def require_distinct_eigenvalues(self, rel_gap: float = 1e-8) -> None:
        lam = self.eigenvalues()
        gaps = -np.diff(lam)
        if np.any(gaps <= rel_gap * max(1.0, abs(lam[0]))):
            raise ConfigError(f"covariance eigenvalues {lam} are not distinct")


def exact_moments(dist: Distribution) -> ModelContext:
    """Exact second and fourth moments of ``dist``."""
    n = dist.dim
    if dist.kind == "finite":
        X, w = dist.atoms, dist.weights
        A = np.einsum("m,ma,mb->ab", w, X, X)
        T4 = np.einsum("m,ma,mb,mc,md->abcd", w, X, X, X, X)
    elif dist.kind == "product_uniform":
        h2 = dist.half_widths**2
        A = np.diag(h2 / 3.0)
        T4 = np.zeros((n,) * 4)
        for a, b, c, d in product(range(n), repeat=4):
            idx = sorted((a, b, c, d))
            if idx[0] == idx[3]:
                T4[a, b, c, d] = h2[idx[0]] ** 2 / 5.0
            elif idx[0] == idx[1] and idx[2] == idx[3]:
                T4[a, b, c, d] = h2[idx[0]] * h2[idx[2]] / 9.0
    else:
        raise ConfigError(f"unknown distribution kind {dist.kind!r}")
    C = (T4 - np.einsum("ab,cd->abcd", A, A)).reshape(n * n, n * n)
    return ModelContext(dist, A, T4, n, C)


def _check_pair(Lam, W):
    if Lam.shape[-1] != Lam.shape[-2]:
        raise NonSquare("Lambda must be square")
    if W.shape[-2] != Lam.shape[-1]:
        raise DimMismatch(f"Lambda {Lam.shape[-2:]} and W {W.shape[-2:]} do not match")


def _skew_part(S):
    return np.tril(S, -1) - np.triu(S, 1)


def sigma(Lam, Q):
    """``Sigma(Lam, Q)``: lower triangle of ``Q^T Lam Q`` minus its upper triangle.

    Entry ``(j, k)`` with ``k < j`` is ``(Q^T Lam Q)_jk``; entry ``(k, j)`` is
    ``-(Q^T Lam Q)_kj``; the diagonal is zero. ``Q`` may be rectangular
    (``n x p``), giving a ``p x p`` result.
    """
    Lam = np.asarray(Lam, dtype=float)
    Q = np.asarray(Q, dtype=float)
    _check_pair(Lam, Q)
    return _skew_part(np.swapaxes(Q, -1, -2) @ Lam @ Q)


def g_drift(Lam, W):
    """``G(Lam, W) = Lam W - W W^T Lam W + W Sigma(Lam, W)``."""
    Lam = np.asarray(Lam, dtype=float)
    W = np.asarray(W, dtype=float)
    _check_pair(Lam, W)
    LW = Lam @ W
    S = np.swapaxes(W, -1, -2) @ LW
    return LW - W @ S + W @ _skew_part(S)


def g_jacobian(Lam, W):
    """Analytic ``D[..., i, j, k, l] = d g_ij(Lam, W) / d w_kl``."""
    Lam = np.asarray(Lam, dtype=float)
    W = np.asarray(W, dtype=float)
    _check_pair(Lam, W)
    n, p = W.shape[-2:]
    Wt = np.swapaxes(W, -1, -2)
    LW = Lam @ W
    S = Wt @ LW
    SigS = _skew_part(S)
    out = np.empty(W.shape + (n, p))
    for k in range(n):
        for l in range(p):
            E = np.zeros((n, p))
            E[k, l] = 1.0
            dS = E.T @ LW + Wt @ (Lam @ E)
            out[..., k, l] = Lam @ E - E @ S - W @ dS + E @ SigS + W @ _skew_part(dS)
    return out


def f1_rhs(Q, ctx: ModelContext):
    """Right-hand side ``Q Sigma(A, Q)`` of the orthogonal-group flow."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape[-1] != Q.shape[-2]:
        raise NonSquare("Q must be square")
    return Q @ sigma(ctx.A, Q)


def projection_tensor(W):
    """``P_ijkl = (w_is w_ks delta_jl - w_kj w_il) / 2`` for square ``W``.

    Orthogonality of ``W`` is not required; off the manifold ``P`` is no longer
    a projection but ``w_ij P_tjkl + w_tj P_ijkl = 0`` still holds.
    """
    W = np.asarray(W, dtype=float)
    if W.shape[-1] != W.shape[-2]:
        raise NonSquare("projection tensor needs square W")
    n = W.shape[-1]
    WWt = W @ np.swapaxes(W, -1, -2)
    first = WWt[..., :, None, :, None] * np.eye(n)[None, :, None, :]
    second = np.einsum("...kj,...il->...ijkl", W, W)
    return 0.5 * (first - second)


def project_tangent(W, M, check: bool = True, tol: float = 1e-8):
    """Project ``M`` onto the tangent space of the Stiefel manifold at ``W``.

    ``(I - W W^T) M + W (W^T M - M^T W) / 2``; reduces to ``(M - W M^T W) / 2``
    when ``p = n`` and to ``(I - W W^T) M`` when ``p = 1``.
    """
    W = np.asarray(W, dtype=float)
    M = np.asarray(M, dtype=float)
    if W.shape[-2:] != M.shape[-2:]:
        raise DimMismatch(f"W {W.shape[-2:]} and M {M.shape[-2:]} differ")
    if check:
        defect = orthogonality_defect(W)
        if np.any(defect > tol):
            raise ColumnsNotOrthonormal(f"||W^T W - I||_F = {np.max(defect):.3e}")
    Wt = np.swapaxes(W, -1, -2)
    WtM = Wt @ M
    return M - W @ WtM + 0.5 * W @ (WtM - np.swapaxes(WtM, -1, -2))


def tangency_residual(W, X):
    """``||W^T X + X^T W||_F``: zero iff ``X`` is tangent at ``W``."""
    WtX = np.swapaxes(W, -1, -2) @ X
    return np.linalg.norm(WtX + np.swapaxes(WtX, -1, -2), axis=(-2, -1))


def drift_linear_map(W):
    """``L[..., i, j, a, b] = g_ij(E_ab, W)``, so ``g(B, W) = L : B``."""
    W = np.asarray(W, dtype=float)
    n, p = W.shape[-2:]
    out = np.empty(W.shape + (n, n))
    for a in range(n):
        for b in range(n):
            E = np.zeros((n, n))
            E[a, b] = 1.0
            out[..., a, b] = g_drift(E, W)
    return out


def covariance_tensor(W, ctx: ModelContext):
    """``M_ijkl = E[g_ij(xx^T - A, W) g_kl(xx^T - A, W)]`` from exact moments."""
    W = np.asarray(W, dtype=float)
    n, p = W.shape[-2:]
    if n != ctx.n:
        raise DimMismatch(f"W has {n} rows, model has dimension {ctx.n}")
    Lf = drift_linear_map(W).reshape(W.shape[:-2] + (n * p, n * n))
    Mf = Lf @ ctx.centered_moments @ np.swapaxes(Lf, -1, -2)
    Mf = 0.5 * (Mf + np.swapaxes(Mf, -1, -2))
    return unflatten4(Mf, (n, p, n, p))


def noise_root(W, ctx: ModelContext, clip_tol: float = 1e-10):
    """Tensor square root ``N`` of the covariance tensor at ``W``."""
    M = covariance_tensor(W, ctx)
    return unflatten4(psd_sqrt(flatten4(M), clip_tol=clip_tol), M.shape[-4:])


def projected_noise(W, ctx: ModelContext):
    """``K_ijkl = P_ijrs N_rskl``."""
    return compose4(projection_tensor(W), noise_root(W, ctx))


def second_order_terms(W, ctx: ModelContext, fd_step: float = 1e-5, manifold_tol: float | None = 1e-8):
    """Ito correction ``J`` and candidate second-order drift ``L`` at ``W``.

    ``J_ij = K_rsml dK_ijml/dw_rs`` with the derivative taken by central
    differences of relative step ``fd_step``;
    ``L_ij = -J_ij / 2 - g_kl(A, W) dg_ij(A, W)/dw_kl / 2``.
    Pass ``manifold_tol=None`` to evaluate off the manifold.
    """
    W = np.asarray(W, dtype=float)
    if manifold_tol is not None:
        defect = orthogonality_defect(W)
        if np.any(defect > manifold_tol):
            raise NotOnManifold(f"||W^T W - I||_F = {np.max(defect):.3e}")
    J = ito_correction(W, ctx, fd_step)
    G = g_drift(ctx.A, W)
    L = -0.5 * J - 0.5 * apply4(g_jacobian(ctx.A, W), G)
    return J, L


def ito_correction(W, ctx: ModelContext, fd_step: float = 1e-5):
    """``J_ij = K_rsml dK_ijml/dw_rs`` (no manifold check)."""
    W = np.asarray(W, dtype=float)
    batch = W.ndim - 2
    K = projected_noise(W, ctx)
    dK = fd_derivative(lambda V: projected_noise(V, ctx), W, h=fd_step * np.maximum(1.0, np.abs(W)), batch_ndim=batch)
    return np.einsum("...rsml,...ijmlrs->...ij", K, dK)


def unstable_obstruction(W, L):
    """``w_ij L_tj + w_tj L_ij``, i.e. ``W L^T + L W^T``."""
    WLt = W @ np.swapaxes(L, -1, -2)
    return WLt + np.swapaxes(WLt, -1, -2)
