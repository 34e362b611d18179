"""Macroscopic QED in lossy dielectrics: susceptibility models, Hopfield
diagonalization, Green-tensor kernels, time-domain dynamics and
equivalence checks between the two lossy-QED formulations."""

from __future__ import annotations

__version__ = "0.1.0"
