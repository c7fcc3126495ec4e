"""Fourier-feature networks: one surrogate per state variable."""

from net.embedding import FourierEmbedding
from net.fourier_net import FourierNet, RwfLayer, Tape, init_network

__all__ = ["FourierEmbedding", "FourierNet", "RwfLayer", "Tape", "init_network"]
