"""Monitored random-circuit simulation and analysis.

Submodules: :mod:`qsim` (statevector engine), :mod:`circuits` (hybrid
circuit ensembles), :mod:`entropy` (Renyi entropies and bootstrap
statistics), :mod:`pauli` and :mod:`tomography` (MUB partitions and state
reconstruction), :mod:`mitigation` (readout and residual-entropy
mitigation), :mod:`collapse` (finite-size-scaling fits) and
:mod:`pipeline` (sweeps and persistence).
"""

__version__ = "0.1.0"
