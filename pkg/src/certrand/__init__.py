"""Certified randomness at desk scale.

Simulated random-circuit-sampling prover, classical XEB verifier with
entropy accounting and Toeplitz extraction, commit-reveal coin flipping for
joint certification, a VDF-chained signed beacon, and application adapters.
"""

__version__ = "0.1.0"
