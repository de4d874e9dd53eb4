"""Oja's online PCA iteration, its Stiefel-manifold diffusion approximations,
and the numerical experiments that check them."""

__version__ = "0.1.0"
