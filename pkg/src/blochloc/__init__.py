"""Bloch-vector runtime assertions for quantum program fault localization.

Core layout:

* :mod:`blochloc.linalg` - density matrices, Bloch vectors, fidelity,
  partial trace;
* :mod:`blochloc.circuits` - segmented circuit IR, QFT/Grover generators;
* :mod:`blochloc.simulator` - ideal statevector and noisy density-matrix
  backends, seeded sampling;
* :mod:`blochloc.schemes` - expected Bloch vectors (closed forms and the
  numeric ground-truth procedure);
* :mod:`blochloc.assertions` - Bloch-vector and projective-measurement
  localization, fault-equivalent matrix;
* :mod:`blochloc.faults` - Add/Remove/Replace gate mutations;
* :mod:`blochloc.stats` / :mod:`blochloc.harness` - statistics kernels and
  the experiment matrix runner;
* :mod:`blochloc.service` / :mod:`blochloc.cli` - FastAPI wrapper and the
  thin command-line client.
"""

__version__ = "0.1.0"
