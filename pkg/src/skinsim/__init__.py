"""Quantum-trajectory simulation of a monitored free-fermion chain with feedback.

The package splits into:

- ``model``: single-particle matrices (Hamiltonian, jump modes, effective
  non-Hermitian Hamiltonian, disorder realizations).
- ``state``: Slater-determinant states and correlation-matrix observables.
- ``engine``: stochastic trajectory integration (quantum-jump unraveling)
  and deterministic trajectory ensembles.
- ``analysis``: velocity diagnostics, transition detection, scaling fits,
  phase-diagram sweeps.
- ``liouvillian``: exact sector-restricted Lindbladian for small chains.
- ``circuit``: qubit statevector realization of the same dynamics.
- ``cli``: the ``skinsim`` experiment runner.
"""

from skinsim.model import ModelSpec
from skinsim.engine import EngineConfig

__all__ = ["ModelSpec", "EngineConfig"]
__version__ = "0.1.0"
