"""Coherence spectroscopy of superconducting qubits."""

__version__ = "0.1.0"
