"""Pulse-level simulation and benchmarking of two-transmon device models.

Three Hamiltonian tiers of the same flux-tunable two-qubit device (a 4x4
effective qubit model, a three-mode Duffing model, and a charge-basis circuit
model) share one calibration and one piecewise-constant propagator, so their
static and time-domain predictions can be compared like for like.
"""

__version__ = "0.1.0"
