"""Seeded random model generation.

Random matrices come from a SplitMix-style 64-bit generator (the standard
reference constants) with Box-Muller sampling, so a given seed reproduces the
same model in any implementation of the same scheme.
"""

from __future__ import annotations

import math

import numpy as np

from .model import SystemSpec, decompose_gamma

__all__ = ["SplitMix64", "random_system"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Generated operator entries are rescaled to this peak magnitude (well inside
# the unit bound) to keep generator norms modest for fixed-step integration.
DEFAULT_MAX_ENTRY = 0.5


class SplitMix64:
    """Deterministic 64-bit stream; ``uniform`` yields doubles in [0, 1)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK
        self._spare: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def gaussian(self) -> float:
        if self._spare is not None:
            g, self._spare = self._spare, None
            return g
        u = 0.0
        while u == 0.0:
            u = self.uniform()
        v = self.uniform()
        r = math.sqrt(-2.0 * math.log(u))
        self._spare = r * math.sin(2.0 * math.pi * v)
        return r * math.cos(2.0 * math.pi * v)


def _gaussian_matrix(rng: SplitMix64, rows: int, cols: int) -> np.ndarray:
    out = np.empty((rows, cols), dtype=np.complex128)
    for i in range(rows):
        for j in range(cols):
            out[i, j] = complex(rng.gaussian(), rng.gaussian()) / math.sqrt(2.0)
    return out


def _rescale(m: np.ndarray, target: float) -> np.ndarray:
    peak = float(np.abs(m).max()) if m.size else 0.0
    if peak == 0.0:
        return m
    return m * (target / peak)


def random_system(
    seed: int,
    d_s: int,
    n_lindblad: int = 1,
    rank: int | None = None,
    max_entry: float = DEFAULT_MAX_ENTRY,
) -> tuple[SystemSpec, np.ndarray]:
    """Generate a valid system plus a PSD trace-one initial state.

    The Hamiltonian is a symmetrized complex Gaussian matrix, the decay
    matrix is G†G for a Gaussian G with ``rank`` rows (guaranteeing positive
    semidefiniteness at the requested rank), and each Lindblad operator is an
    unconstrained Gaussian matrix; every operator is rescaled to peak entry
    magnitude ``max_entry``.  The decay dimension is set to the realized rank
    of the decay matrix.  Returns ``(spec, rho0)``.
    """
    if d_s < 1:
        raise ValueError("d_s must be positive")
    if rank is None:
        rank = d_s
    if not 1 <= rank <= d_s:
        raise ValueError(f"rank must lie in [1, {d_s}], got {rank}")
    if n_lindblad < 0:
        raise ValueError("n_lindblad must be non-negative")
    rng = SplitMix64(seed)
    w = _gaussian_matrix(rng, d_s, d_s)
    hamiltonian = _rescale(0.5 * (w + w.conj().T), max_entry)
    g = _gaussian_matrix(rng, rank, d_s)
    gamma = _rescale(g.conj().T @ g, max_entry)
    ops = tuple(
        _rescale(_gaussian_matrix(rng, d_s, d_s), max_entry) for _ in range(n_lindblad)
    )
    r = _gaussian_matrix(rng, d_s, d_s)
    s = r.conj().T @ r
    trace = float(np.trace(s).real)
    rho0 = s / trace if trace > 1e-12 else np.eye(d_s, dtype=np.complex128) / d_s
    dec = decompose_gamma(gamma)
    spec = SystemSpec(
        d_s=d_s,
        d_f=max(dec.rank, 1),
        hamiltonian=hamiltonian,
        decay_matrix=gamma,
        lindblad_ops=ops,
    )
    return spec, rho0
