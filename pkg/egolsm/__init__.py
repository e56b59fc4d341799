"""Latent space model estimation from an ego-centered partial network view."""

__version__ = "0.1.0"
