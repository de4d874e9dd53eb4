"""Dense linear-algebra primitives.

Matrices are plain ``numpy`` arrays. Rank-4 tensors are arrays of shape
``(n1, n2, n3, n4)``; the flattening convention used everywhere maps the index
pair ``(i, j)`` to row ``i * n2 + j`` and ``(k, l)`` to column ``k * n4 + l``
(row-major, so a C-order ``reshape``).  Most functions accept leading batch
dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DimMismatch,
    ExcessiveAsymmetry,
    NonFiniteEvaluation,
    NonSquare,
    NotPSD,
)

ASYMMETRY_TOL = 1e-10
DEFAULT_CLIP_TOL = 1e-10


@dataclass(frozen=True)
class SymEigResult:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal


def _check_square(S):
    if S.ndim < 2 or S.shape[-1] != S.shape[-2]:
        raise NonSquare(f"expected square matrix, got shape {S.shape}")


def _symmetrize(S, tol=ASYMMETRY_TOL):
    _check_square(S)
    asym = np.linalg.norm(S - np.swapaxes(S, -1, -2), axis=(-2, -1))
    scale = np.linalg.norm(S, axis=(-2, -1))
    if np.any(asym > tol * np.maximum(scale, np.finfo(float).tiny)):
        raise ExcessiveAsymmetry(f"asymmetry {np.max(asym):.3e} exceeds {tol:g}*||S||_F")
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def sym_eig(S, tol: float = 1e-14, max_sweeps: int = 60) -> SymEigResult:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Sweeps visit pairs ``(p, q)`` in fixed row order, so identical input gives
    bit-identical output. Converged once the largest off-diagonal entry is at
    most ``tol * ||S||_F``.
    """
    S = np.array(S, dtype=float)
    if S.ndim != 2:
        raise NonSquare(f"expected a single square matrix, got shape {S.shape}")
    a = _symmetrize(S)
    d = a.shape[0]
    v = np.eye(d)
    thresh = tol * np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diag(a)))
        if d < 2 or off.max() <= thresh:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, tau) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return SymEigResult(lam[order], v[:, order])


def psd_sqrt(S, clip_tol: float = DEFAULT_CLIP_TOL, method: str = "lapack"):
    """Symmetric PSD square root ``V diag(sqrt(max(lam, 0))) V^T``.

    ``S`` may carry leading batch dimensions. Eigenvalues in
    ``[-clip_tol * scale, 0)`` with ``scale = max(1, lam_max)`` are clipped to
    zero; anything more negative raises :class:`NotPSD`. Eigenvalues at
    roundoff level (``|lam| <= d * eps * scale``) are also zeroed so that the
    root keeps the null space of ``S`` exactly; otherwise ``sqrt(1e-16)``
    leaks ``1e-8`` into it. ``method="jacobi"`` routes single matrices
    through :func:`sym_eig`.
    """
    S = np.asarray(S, dtype=float)
    Ssym = _symmetrize(S)
    if method == "jacobi":
        if Ssym.ndim != 2:
            raise NonSquare("jacobi method handles one matrix at a time")
        res = sym_eig(Ssym)
        lam, V = res.eigenvalues, res.eigenvectors
    elif method == "lapack":
        lam, V = np.linalg.eigh(Ssym)
    else:
        raise ValueError(f"unknown method {method!r}")
    scale = np.maximum(1.0, lam.max(axis=-1, keepdims=True))
    if np.any(lam < -clip_tol * scale):
        raise NotPSD(f"eigenvalue {lam.min():.3e} below -{clip_tol:g}*scale")
    floor = lam.shape[-1] * np.finfo(float).eps * scale
    root = np.sqrt(np.where(lam <= floor, 0.0, lam))
    return (V * root[..., None, :]) @ np.swapaxes(V, -1, -2)


def flatten4(T):
    """``(..., n1, n2, n1, n2)`` tensor to ``(..., n1*n2, n1*n2)`` matrix."""
    T = np.asarray(T)
    if T.ndim < 4:
        raise DimMismatch(f"need a rank-4 tensor, got shape {T.shape}")
    n1, n2, n3, n4 = T.shape[-4:]
    if (n1, n2) != (n3, n4):
        raise DimMismatch(f"paired dims differ: {(n1, n2)} vs {(n3, n4)}")
    return T.reshape(T.shape[:-4] + (n1 * n2, n3 * n4))


def unflatten4(M, dims):
    M = np.asarray(M)
    n1, n2, n3, n4 = dims
    if M.shape[-2:] != (n1 * n2, n3 * n4):
        raise DimMismatch(f"matrix shape {M.shape[-2:]} does not match dims {dims}")
    return M.reshape(M.shape[:-2] + (n1, n2, n3, n4))


def apply4(T, F):
    """Contract ``T_ijkl F_kl`` (batch-aware)."""
    return np.einsum("...ijkl,...kl->...ij", T, F)


def compose4(T, U):
    """Contract ``T_ijrs U_rskl``."""
    return np.einsum("...ijrs,...rskl->...ijkl", T, U)


def haar_orthogonal(n: int, rng: np.random.Generator, size=None):
    """Haar-distributed orthogonal matrix (or a stack when ``size`` is given).

    QR of a standard Gaussian matrix with the signs of ``diag(R)`` folded into
    ``Q`` so the factorisation is unique.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    shape = (n, n) if size is None else tuple(np.atleast_1d(size)) + (n, n)
    Z = rng.standard_normal(shape)
    Q, R = np.linalg.qr(Z)
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return Q * d[..., None, :]


def fd_step(W, rel: float = 1e-5):
    return rel * np.maximum(1.0, np.abs(W))


def fd_derivative(f: Callable, W, h=None, batch_ndim: int = 0):
    """Central-difference partials of ``f`` with respect to each entry of ``W``.

    ``W`` has shape ``(*batch, n, p)`` where ``batch`` spans the first
    ``batch_ndim`` axes and ``f`` maps it to ``(*batch, *out)``. Returns an
    array of shape ``(*batch, *out, n, p)`` whose last two axes index the
    differentiated entry ``w_rs``. ``h`` defaults to ``1e-5 * max(1, |w_rs|)``
    per entry; a scalar ``h`` is used as is.
    """
    W = np.asarray(W, dtype=float)
    n, p = W.shape[-2:]
    steps = fd_step(W) if h is None else np.broadcast_to(np.asarray(h, dtype=float), W.shape)
    cols = []
    for r in range(n):
        for s in range(p):
            hrs = steps[..., r, s]
            Wp = W.copy()
            Wm = W.copy()
            Wp[..., r, s] += hrs
            Wm[..., r, s] -= hrs
            fp = np.asarray(f(Wp), dtype=float)
            fm = np.asarray(f(Wm), dtype=float)
            extra = fp.ndim - batch_ndim
            denom = (2.0 * hrs).reshape(hrs.shape + (1,) * extra)
            cols.append((fp - fm) / denom)
    out = np.stack(cols, axis=-1)
    if not np.all(np.isfinite(out)):
        raise NonFiniteEvaluation("finite-difference evaluation produced non-finite values")
    return out.reshape(out.shape[:-1] + (n, p))


def orthogonality_defect(W):
    """``||W^T W - I||_F`` (batch-aware)."""
    p = W.shape[-1]
    return np.linalg.norm(np.swapaxes(W, -1, -2) @ W - np.eye(p), axis=(-2, -1))
