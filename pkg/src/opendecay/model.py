"""Physical model assembly.

Validates the physics input (hermitian Hamiltonian, positive semidefinite
decay matrix, Lindblad operators), extracts the spectral data of the decay
matrix, builds the decay operator that feeds the decay-product space, embeds
everything on the direct sum of system and decay spaces, and assembles the
corresponding Liouvillian superoperators in column-stacking convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConstraintError, DimensionError, NotPSDError
from .linalg import as_matrix, frobenius, hermitian_eig

DEFAULT_HERMITICITY_TOL = 1e-10
# Eigenvalues of the decay matrix at or below this (times max(1, ||Gamma||_F))
# count as zero when classifying the null space.
DEFAULT_ZERO_TOL = 1e-12

__all__ = [
    "DecayOperator",
    "EnlargedModel",
    "GammaDecomposition",
    "Liouvillian",
    "SystemSpec",
    "assemble_liouvillian",
    "assemble_liouvillian_wwa",
    "build_decay_operator",
    "decompose_gamma",
    "effective_hamiltonian",
    "embed_operators",
    "embed_state",
    "validate_spec",
]


@dataclass(frozen=True)
class SystemSpec:
    """Physics input for a decaying open system.

    ``hamiltonian`` is the hermitian part of the effective Hamiltonian,
    ``decay_matrix`` the positive semidefinite decay-rate matrix, and
    ``lindblad_ops`` the decoherence/dissipation operators, all d_s x d_s.
    ``d_f`` is the dimension reserved for the decay-product space.
    """

    d_s: int
    d_f: int
    hamiltonian: np.ndarray
    decay_matrix: np.ndarray
    lindblad_ops: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        if self.d_s < 1 or self.d_f < 1:
            raise DimensionError("d_s and d_f must be positive integers")
        object.__setattr__(self, "hamiltonian", as_matrix(self.hamiltonian))
        object.__setattr__(self, "decay_matrix", as_matrix(self.decay_matrix))
        object.__setattr__(
            self, "lindblad_ops", tuple(as_matrix(a) for a in self.lindblad_ops)
        )
        shape = (self.d_s, self.d_s)
        if self.hamiltonian.shape != shape:
            raise DimensionError(
                f"hamiltonian has shape {self.hamiltonian.shape}, expected {shape}"
            )
        if self.decay_matrix.shape != shape:
            raise DimensionError(
                f"decay matrix has shape {self.decay_matrix.shape}, expected {shape}"
            )
        for k, a in enumerate(self.lindblad_ops):
            if a.shape != shape:
                raise DimensionError(
                    f"lindblad operator {k} has shape {a.shape}, expected {shape}"
                )

    @cached_property
    def _lindblad_gram_sum(self) -> np.ndarray:
        acc = np.zeros((self.d_s, self.d_s), dtype=np.complex128)
        for a in self.lindblad_ops:
            acc += a.conj().T @ a
        return acc

    @cached_property
    def _wwa_generator(self) -> np.ndarray:
        # H - (i/2)(Gamma + sum A†A): folds every anticommutator of the master
        # equation into one non-hermitian generator, so each rhs evaluation
        # needs only 2 + 2*len(A) products.
        return self.hamiltonian - 0.5j * (self.decay_matrix + self._lindblad_gram_sum)

    @cached_property
    def _wwa_generator_adjoint(self) -> np.ndarray:
        return self._wwa_generator.conj().T

    @cached_property
    def _jump_pairs(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        return tuple((a, a.conj().T) for a in self.lindblad_ops)


def effective_hamiltonian(spec: SystemSpec) -> np.ndarray:
    """Non-hermitian effective Hamiltonian H - (i/2) Gamma."""
    return spec.hamiltonian - 0.5j * spec.decay_matrix


def _hermitian_deviation(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - a.conj().T))


def validate_spec(spec: SystemSpec, tol: float = DEFAULT_HERMITICITY_TOL) -> SystemSpec:
    """Check hermiticity of H and Gamma, positivity of Gamma, and that the
    decay space is large enough (d_f >= rank Gamma).  Returns ``spec``
    unchanged when every invariant holds.
    """
    from .errors import NotHermitianError

    for name, mat in (("H", spec.hamiltonian), ("Gamma", spec.decay_matrix)):
        dev = _hermitian_deviation(mat)
        bound = tol * max(1.0, frobenius(mat))
        if dev > bound:
            raise NotHermitianError(
                f"{name} deviates from hermiticity by {dev:.3e} (allowed {bound:.3e})"
            )
    gamma = 0.5 * (spec.decay_matrix + spec.decay_matrix.conj().T)
    lam = np.linalg.eigvalsh(gamma)
    if lam[0] < -tol:
        raise NotPSDError(f"Gamma has eigenvalue {lam[0]:.3e} < -{tol:g}")
    cut = DEFAULT_ZERO_TOL * max(1.0, frobenius(gamma))
    rank = int(np.count_nonzero(lam > cut))
    if spec.d_f < rank:
        raise DimensionError(
            f"d_f={spec.d_f} is smaller than rank(Gamma)={rank}; "
            "the decay space must satisfy d_f >= rank"
        )
    return spec


@dataclass(frozen=True)
class GammaDecomposition:
    """Strictly positive decay rates and their orthonormal modes.

    ``modes`` holds the eigenvectors of the decay matrix as columns, ordered
    by descending rate; ``rank + null_dim`` equals the system dimension.
    """

    rates: np.ndarray
    modes: np.ndarray
    rank: int
    null_dim: int


def _lex_key(col: np.ndarray):
    return tuple((round(float(z.real), 12), round(float(z.imag), 12)) for z in col)


def decompose_gamma(gamma, zero_tol: float = DEFAULT_ZERO_TOL) -> GammaDecomposition:
    """Spectral decomposition of the decay matrix.

    Eigenvalues at or below ``zero_tol * max(1, ||Gamma||_F)`` are classified
    as zero and counted in ``null_dim``; anything below the negative of that
    threshold raises :class:`NotPSDError`.  Ties between equal rates are
    broken by lexicographic order of the (sign-fixed) eigenvectors so the
    output is deterministic.
    """
    g = as_matrix(gamma)
    if g.shape[0] != g.shape[1]:
        raise DimensionError(f"decay matrix must be square, got {g.shape}")
    eig = hermitian_eig(g)
    cut = zero_tol * max(1.0, frobenius(g))
    lam = eig.eigenvalues
    if lam[0] < -cut:
        raise NotPSDError(f"decay matrix has eigenvalue {lam[0]:.3e} < -{cut:.3e}")
    keep = [j for j in range(lam.size) if lam[j] > cut]
    order = sorted(keep, key=lambda j: (-lam[j], _lex_key(eig.eigenvectors[:, j])))
    rates = np.array([lam[j] for j in order], dtype=float)
    modes = eig.eigenvectors[:, order]
    return GammaDecomposition(
        rates=rates, modes=modes, rank=len(order), null_dim=g.shape[0] - len(order)
    )


@dataclass(frozen=True)
class DecayOperator:
    """Map from the system space into the decay space.

    ``matrix`` is d_f x d_s with matrix† matrix equal to the decay matrix;
    ``coeffs`` is the d_f x rank coefficient matrix expressing it over the
    decay modes.
    """

    matrix: np.ndarray
    coeffs: np.ndarray

    @cached_property
    def gram(self) -> np.ndarray:
        """matrix† @ matrix; equals the decay matrix by construction."""
        return self.matrix.conj().T @ self.matrix


def build_decay_operator(
    dec: GammaDecomposition, d_f: int, coeffs=None
) -> DecayOperator:
    """Construct a decay operator from spectral data.

    With ``coeffs=None`` each decaying mode feeds exactly one decay state
    with amplitude sqrt(rate); rows beyond ``rank`` stay zero when
    ``d_f > rank``.  A custom d_f x rank matrix is accepted if it satisfies
    coeffs† @ coeffs = diag(rates) within 1e-8, which is exactly the
    condition for matrix† matrix to reproduce the decay matrix.
    """
    if d_f < dec.rank:
        raise DimensionError(f"d_f={d_f} is smaller than rank={dec.rank}")
    if coeffs is None:
        b = np.zeros((d_f, dec.rank), dtype=np.complex128)
        for j in range(dec.rank):
            b[j, j] = math.sqrt(dec.rates[j])
    else:
        b = as_matrix(coeffs)
        if b.shape != (d_f, dec.rank):
            raise DimensionError(
                f"coefficient matrix has shape {b.shape}, expected {(d_f, dec.rank)}"
            )
        resid = frobenius(b.conj().T @ b - np.diag(dec.rates))
        if resid > 1e-8:
            raise ConstraintError(
                f"coefficients violate coeffs† coeffs = diag(rates): residual {resid:.3e}"
            )
    return DecayOperator(matrix=b @ dec.modes.conj().T, coeffs=b)


@dataclass(frozen=True)
class EnlargedModel:
    """Operators on the direct sum of system and decay spaces.

    System operators live in the upper-left block; ``decay_op`` carries the
    decay map in the lower-left block and is nilpotent by construction.
    """

    d_s: int
    d_f: int
    hamiltonian: np.ndarray
    lindblad_ops: tuple[np.ndarray, ...]
    decay_op: np.ndarray

    @property
    def d_tot(self) -> int:
        return self.d_s + self.d_f

    @cached_property
    def jump_ops(self) -> tuple[np.ndarray, ...]:
        """All dissipator operators: the embedded Lindblad operators plus the
        decay operator."""
        return self.lindblad_ops + (self.decay_op,)

    @cached_property
    def _generator(self) -> np.ndarray:
        # Embedded analogue of SystemSpec._wwa_generator.
        acc = np.zeros((self.d_tot, self.d_tot), dtype=np.complex128)
        for k in self.jump_ops:
            acc += k.conj().T @ k
        return self.hamiltonian - 0.5j * acc

    @cached_property
    def _generator_adjoint(self) -> np.ndarray:
        return self._generator.conj().T

    @cached_property
    def _jump_pairs(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        return tuple((k, k.conj().T) for k in self.jump_ops)


def _embed_block(m: np.ndarray, d_s: int, d_f: int) -> np.ndarray:
    out = np.zeros((d_s + d_f, d_s + d_f), dtype=np.complex128)
    out[:d_s, :d_s] = m
    return out


def embed_state(rho_ss, d_f: int) -> np.ndarray:
    """Block-diagonal embedding diag(rho_ss, 0) into the enlarged space."""
    rho = as_matrix(rho_ss)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"state must be square, got {rho.shape}")
    return _embed_block(rho, rho.shape[0], d_f)


def embed_operators(spec: SystemSpec, decay: DecayOperator) -> EnlargedModel:
    """Embed the system operators and the decay operator on the enlarged space.

    The Hamiltonian block uses the hermitian part only; the decay is carried
    entirely by the lower-left block of ``decay_op``.
    """
    if decay.matrix.shape != (spec.d_f, spec.d_s):
        raise DimensionError(
            f"decay operator has shape {decay.matrix.shape}, "
            f"expected {(spec.d_f, spec.d_s)}"
        )
    cal_b = np.zeros((spec.d_s + spec.d_f,) * 2, dtype=np.complex128)
    cal_b[spec.d_s :, : spec.d_s] = decay.matrix
    return EnlargedModel(
        d_s=spec.d_s,
        d_f=spec.d_f,
        hamiltonian=_embed_block(spec.hamiltonian, spec.d_s, spec.d_f),
        lindblad_ops=tuple(
            _embed_block(a, spec.d_s, spec.d_f) for a in spec.lindblad_ops
        ),
        decay_op=cal_b,
    )


@dataclass(frozen=True)
class Liouvillian:
    """Evolution generator in column-stacking form:
    d vec(rho)/dt = matrix @ vec(rho)."""

    matrix: np.ndarray
    dim: int


def _dissipator_superop(k: np.ndarray) -> np.ndarray:
    kk = k.conj().T @ k
    eye = np.eye(k.shape[0], dtype=np.complex128)
    return (
        np.kron(k.conj(), k)
        - 0.5 * np.kron(eye, kk)
        - 0.5 * np.kron(kk.T, eye)
    )


def assemble_liouvillian(hamiltonian, lindblad_ops=(), decay_op=None) -> Liouvillian:
    """Superoperator matrix of the trace-preserving master equation
    -i[H, rho] minus the dissipator over all given jump operators."""
    h = as_matrix(hamiltonian)
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"hamiltonian must be square, got {h.shape}")
    d = h.shape[0]
    eye = np.eye(d, dtype=np.complex128)
    mat = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    ops = list(lindblad_ops)
    if decay_op is not None:
        ops.append(decay_op)
    for k in ops:
        k = as_matrix(k)
        if k.shape != h.shape:
            raise DimensionError(f"jump operator has shape {k.shape}, expected {h.shape}")
        mat += _dissipator_superop(k)
    return Liouvillian(matrix=mat, dim=d)


def assemble_liouvillian_wwa(spec: SystemSpec) -> Liouvillian:
    """Superoperator matrix of the system-space master equation with the
    non-hermitian effective Hamiltonian (trace non-increasing)."""
    heff = effective_hamiltonian(spec)
    eye = np.eye(spec.d_s, dtype=np.complex128)
    mat = -1j * np.kron(eye, heff) + 1j * np.kron(heff.conj(), eye)
    for a in spec.lindblad_ops:
        mat += _dissipator_superop(a)
    return Liouvillian(matrix=mat, dim=spec.d_s)
