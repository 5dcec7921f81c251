"""Node-centric latent-radius models for spatial networks."""

__version__ = "0.1.0"
