"""Distributed-RIS MIMO autoencoder link simulator."""

__version__ = "0.1.0"
