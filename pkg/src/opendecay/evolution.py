"""Time evolution of density matrices.

Provides the right-hand sides of the system-space master equation (with the
non-hermitian effective Hamiltonian), the trace-preserving enlarged-space
equation, and its block-decoupled form; a fixed-step RK4 integrator; the exact
superoperator-exponential propagator used as an oracle; the cumulative
quadrature for the decay block; and the closed form of the single-channel
decay.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GridError, NumericsError
from .linalg import as_matrix, expm, unvec, vec
from .model import (
    DecayOperator,
    EnlargedModel,
    Liouvillian,
    SystemSpec,
    assemble_liouvillian,
    assemble_liouvillian_wwa,
)

# Allowed per-step hermiticity drift before the integrator aborts.
HERMITICITY_DRIFT_TOL = 1e-9

__all__ = [
    "BlockDensity",
    "IntegratorConfig",
    "Trajectory",
    "closed_form_1d",
    "evolve_blocks",
    "evolve_enlarged",
    "evolve_wwa",
    "integrate_rk4",
    "propagate_exact",
    "rho_ff_quadrature",
    "rhs_blocks",
    "rhs_enlarged",
    "rhs_wwa",
]


@dataclass(frozen=True)
class BlockDensity:
    """Density matrix on the enlarged space, addressed by blocks: system
    (ss), coherences (sf, fs), and decay products (ff)."""

    rho_ss: np.ndarray
    rho_sf: np.ndarray
    rho_fs: np.ndarray
    rho_ff: np.ndarray

    @classmethod
    def from_full(cls, rho, d_s: int) -> "BlockDensity":
        a = as_matrix(rho)
        if a.shape[0] != a.shape[1] or a.shape[0] < d_s:
            raise DimensionError(f"cannot split shape {a.shape} at d_s={d_s}")
        return cls(
            rho_ss=a[:d_s, :d_s],
            rho_sf=a[:d_s, d_s:],
            rho_fs=a[d_s:, :d_s],
            rho_ff=a[d_s:, d_s:],
        )

    def to_full(self) -> np.ndarray:
        return np.block([[self.rho_ss, self.rho_sf], [self.rho_fs, self.rho_ff]])

    @property
    def total_trace(self) -> float:
        return float(np.trace(self.rho_ss).real + np.trace(self.rho_ff).real)


@dataclass(frozen=True)
class Trajectory:
    """Sampled evolution: strictly increasing times and one state per time.

    ``d_s`` is set for enlarged-space runs so samples can be addressed by
    block; it stays ``None`` for system-space-only runs.
    """

    times: np.ndarray
    states: tuple[np.ndarray, ...]
    d_s: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "states", tuple(self.states))
        if self.times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if len(self.states) != self.times.size:
            raise ValueError("states and times must have equal length")

    def __len__(self) -> int:
        return int(self.times.size)

    def blocks(self, i: int) -> BlockDensity:
        if self.d_s is None:
            raise DimensionError("trajectory has no block structure (d_s unset)")
        return BlockDensity.from_full(self.states[i], self.d_s)


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration setup.

    The grid is k*dt for k = 0..round(t_max/dt); samples are taken every
    ``sample_stride`` steps plus the final step.  ``t_max = 0`` yields the
    degenerate single-sample trajectory at t = 0.
    """

    dt: float
    t_max: float
    sample_stride: int = 1
    method: str = "rk4"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")
        if self.t_max > 0 and self.dt > self.t_max * (1 + 1e-12):
            raise ValueError("dt must not exceed t_max")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be at least 1")
        if self.method not in ("rk4", "exact"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def n_steps(self) -> int:
        if self.t_max == 0:
            return 0
        return max(1, int(round(self.t_max / self.dt)))

    def sampled_steps(self) -> list[int]:
        n = self.n_steps
        ks = list(range(0, n + 1, self.sample_stride))
        if ks[-1] != n:
            ks.append(n)
        return ks


def rhs_wwa(rho, spec: SystemSpec) -> np.ndarray:
    """Derivative of the system-space density matrix: non-hermitian effective
    Hamiltonian plus the Lindblad dissipator."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (spec.d_s, spec.d_s):
        raise DimensionError(f"state has shape {rho.shape}, expected {(spec.d_s,) * 2}")
    gen = spec._wwa_generator
    out = -1j * (gen @ rho - rho @ spec._wwa_generator_adjoint)
    for a, a_dag in spec._jump_pairs:
        out += a @ rho @ a_dag
    return out


def rhs_enlarged(rho, model: EnlargedModel) -> np.ndarray:
    """Derivative on the enlarged space: hermitian Hamiltonian commutator plus
    the dissipator over the embedded Lindblad operators and the decay
    operator.  Trace-free by construction."""
    rho = np.asarray(rho, dtype=np.complex128)
    gen = model._generator
    if rho.shape != gen.shape:
        raise DimensionError(f"state has shape {rho.shape}, expected {gen.shape}")
    out = -1j * (gen @ rho - rho @ model._generator_adjoint)
    for k, k_dag in model._jump_pairs:
        out += k @ rho @ k_dag
    return out


def rhs_blocks(blocks: BlockDensity, spec: SystemSpec, decay: DecayOperator) -> BlockDensity:
    """Block-decoupled derivative.

    The system block evolves under the effective Hamiltonian built from the
    decay operator's gram matrix, the coherence blocks decay independently,
    and the decay block grows as B rho_ss B†.
    """
    if blocks.rho_ss.shape != (spec.d_s, spec.d_s):
        raise DimensionError(
            f"rho_ss has shape {blocks.rho_ss.shape}, expected {(spec.d_s,) * 2}"
        )
    if decay.matrix.shape != (spec.d_f, spec.d_s):
        raise DimensionError(
            f"decay operator has shape {decay.matrix.shape}, "
            f"expected {(spec.d_f, spec.d_s)}"
        )
    gen = spec.hamiltonian - 0.5j * (decay.gram + spec._lindblad_gram_sum)
    gen_dag = gen.conj().T
    d_ss = -1j * (gen @ blocks.rho_ss - blocks.rho_ss @ gen_dag)
    for a, a_dag in spec._jump_pairs:
        d_ss += a @ blocks.rho_ss @ a_dag
    d_sf = -1j * (gen @ blocks.rho_sf)
    d_fs = 1j * (blocks.rho_fs @ gen_dag)
    d_ff = decay.matrix @ blocks.rho_ss @ decay.matrix.conj().T
    return BlockDensity(rho_ss=d_ss, rho_sf=d_sf, rho_fs=d_fs, rho_ff=d_ff)


def _check_grid(cfg: IntegratorConfig) -> int:
    n = cfg.n_steps
    if abs(n * cfg.dt - cfg.t_max) > 1e-9 * max(1.0, cfg.t_max):
        warnings.warn(
            f"t_max={cfg.t_max!r} is not an integer multiple of dt={cfg.dt!r}; "
            f"integrating to {n * cfg.dt!r}",
            stacklevel=3,
        )
    return n


def integrate_rk4(
    rhs,
    rho0,
    cfg: IntegratorConfig,
    d_s: int | None = None,
    drift_tol: float = HERMITICITY_DRIFT_TOL,
) -> Trajectory:
    """Classical fixed-step fourth-order Runge-Kutta.

    The state is re-symmetrized after every step; the pre-symmetrization
    hermiticity drift is monitored and a :class:`NumericsError` is raised if
    it ever exceeds ``drift_tol``.
    """
    rho = as_matrix(rho0).copy()
    n = _check_grid(cfg)
    dt = cfg.dt
    wanted = cfg.sampled_steps()
    times = [0.0]
    states = [rho.copy()]
    wi = 1  # wanted[0] == 0 always
    for k in range(1, n + 1):
        k1 = rhs(rho)
        k2 = rhs(rho + (0.5 * dt) * k1)
        k3 = rhs(rho + (0.5 * dt) * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        rho_dag = rho.conj().T
        drift = float(np.linalg.norm(rho - rho_dag))
        if drift > drift_tol:
            raise NumericsError(
                f"hermiticity drift {drift:.3e} at step {k} exceeds {drift_tol:g}"
            )
        rho = 0.5 * (rho + rho_dag)
        if wi < len(wanted) and wanted[wi] == k:
            times.append(k * dt)
            states.append(rho.copy())
            wi += 1
    return Trajectory(times=np.array(times), states=tuple(states), d_s=d_s)


def propagate_exact(liouv: Liouvillian, rho0, t: float) -> np.ndarray:
    """Exact propagation: unvec(expm(L t) @ vec(rho0))."""
    if t < 0:
        raise ValueError("t must be non-negative")
    rho = as_matrix(rho0)
    if rho.shape != (liouv.dim, liouv.dim):
        raise DimensionError(f"state has shape {rho.shape}, expected {(liouv.dim,) * 2}")
    return unvec(expm(liouv.matrix * t) @ vec(rho), liouv.dim)


def _evolve_exact(liouv: Liouvillian, rho0, cfg: IntegratorConfig, d_s=None) -> Trajectory:
    n = _check_grid(cfg)
    step = expm(liouv.matrix * cfg.dt)
    v = vec(as_matrix(rho0))
    wanted = cfg.sampled_steps()
    times = [0.0]
    states = [unvec(v, liouv.dim)]
    wi = 1
    for k in range(1, n + 1):
        v = step @ v
        if wi < len(wanted) and wanted[wi] == k:
            times.append(k * cfg.dt)
            states.append(unvec(v, liouv.dim))
            wi += 1
    return Trajectory(times=np.array(times), states=tuple(states), d_s=d_s)


def evolve_wwa(spec: SystemSpec, rho0, cfg: IntegratorConfig) -> Trajectory:
    """Evolve the system-space master equation with the configured method."""
    if cfg.method == "exact":
        return _evolve_exact(assemble_liouvillian_wwa(spec), rho0, cfg)
    return integrate_rk4(lambda r: rhs_wwa(r, spec), rho0, cfg)


def evolve_enlarged(model: EnlargedModel, rho0, cfg: IntegratorConfig) -> Trajectory:
    """Evolve the enlarged-space master equation with the configured method."""
    if cfg.method == "exact":
        liouv = assemble_liouvillian(
            model.hamiltonian, model.lindblad_ops, model.decay_op
        )
        return _evolve_exact(liouv, rho0, cfg, d_s=model.d_s)
    return integrate_rk4(lambda r: rhs_enlarged(r, model), rho0, cfg, d_s=model.d_s)


def evolve_blocks(
    spec: SystemSpec, decay: DecayOperator, rho0, cfg: IntegratorConfig
) -> Trajectory:
    """Integrate the block-decoupled equations (RK4 only); same trajectory as
    the full enlarged equation, computed block by block."""
    if cfg.method != "rk4":
        raise ValueError("evolve_blocks supports the rk4 method only")

    def rhs(rho):
        return rhs_blocks(BlockDensity.from_full(rho, spec.d_s), spec, decay).to_full()

    return integrate_rk4(rhs, rho0, cfg, d_s=spec.d_s)


def rho_ff_quadrature(decay: DecayOperator, traj: Trajectory) -> list[np.ndarray]:
    """Decay block by cumulative composite trapezoid over B rho_ss(t') B†.

    ``traj`` must hold the system-block trajectory on a uniform grid; the
    result starts from a zero decay block.
    """
    times = traj.times
    b = decay.matrix
    if times.size == 1:
        return [np.zeros((b.shape[0], b.shape[0]), dtype=np.complex128)]
    diffs = np.diff(times)
    h = float(diffs[0])
    if np.any(np.abs(diffs - h) > 1e-9 * h):
        raise GridError("time grid is not uniform")
    arr = np.stack([np.asarray(s, dtype=np.complex128) for s in traj.states])
    if arr.shape[1:] != (b.shape[1], b.shape[1]):
        raise DimensionError(
            f"system states have shape {arr.shape[1:]}, expected {(b.shape[1],) * 2}"
        )
    g = b[None, :, :] @ arr @ b.conj().T[None, :, :]
    cum = np.cumsum(g, axis=0)
    out = h * (cum - 0.5 * (g[0][None, :, :] + g))
    out[0] = 0.0
    return [out[k] for k in range(out.shape[0])]


def closed_form_1d(energy: float, rate: float, t: float) -> BlockDensity:
    """Closed form of the single decay channel started in the unstable state:
    diag(exp(-rate*t), 1 - exp(-rate*t)).  Independent of ``energy``, which is
    kept for signature symmetry with the model input."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if t < 0:
        raise ValueError("t must be non-negative")
    surv = float(np.exp(-rate * t))
    return BlockDensity(
        rho_ss=np.array([[surv]], dtype=np.complex128),
        rho_sf=np.zeros((1, 1), dtype=np.complex128),
        rho_fs=np.zeros((1, 1), dtype=np.complex128),
        rho_ff=np.array([[1.0 - surv]], dtype=np.complex128),
    )
