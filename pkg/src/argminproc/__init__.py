"""Argmin process of Brownian motion, random walks and stable Levy processes."""
__version__ = "0.1.0"
