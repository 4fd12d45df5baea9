"""Single-photon camera simulation, reconstruction and image-quality toolkit."""

__version__ = "0.0.1"
