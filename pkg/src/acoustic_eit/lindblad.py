"""Lindblad master equation for the driven three-level ladder.

This module is the in-package oracle for the scattering formulas in
``model``: it builds the rotating-frame Hamiltonian and jump operators,
solves the steady state exactly (dense linear algebra, no perturbation in
the probe), and reads the reflection coefficient off the steady-state
coherence. In the weak-probe limit the result must agree with the
closed-form kernel to high accuracy; ``weak_probe_deviation`` measures that
agreement on a grid.

Conventions
-----------
Basis ordering |0>, |1>, |2>. The frame rotates at the probe frequency on
the 0-1 transition and at probe+control on the 0-2 transition, so

    H = -Delta_p |1><1| - (Delta_p + Delta_c) |2><2|
        + (Omega_p/2)(|0><1| + |1><0|) + (Omega_c/2)(|1><2| + |2><1|).

Jump operators: sqrt(Gamma10)|0><1|, sqrt(Gamma21)|1><2|,
sqrt(2*gphi1)|1><1|, sqrt(2*gphi2)|2><2|.

Superoperators act on column-stacked density matrices:
vec(A rho B) = (B^T kron A) vec(rho).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import SteadyStateError
from .model import DriveCondition, ThreeLevelAtom, reflection

_DIM = 3
# steady-state residual acceptance relative to the Liouvillian scale
_RESIDUAL_RTOL = 1e-10


def hamiltonian(atom: ThreeLevelAtom, drive: DriveCondition) -> np.ndarray:
    """Rotating-frame Hamiltonian in angular-frequency units (3x3 complex)."""
    h = np.zeros((_DIM, _DIM), dtype=complex)
    h[1, 1] = -drive.Delta_p
    h[2, 2] = -(drive.Delta_p + drive.Delta_c)
    h[0, 1] = h[1, 0] = 0.5 * drive.Omega_p
    h[1, 2] = h[2, 1] = 0.5 * drive.Omega_c
    return h


def jump_operators(atom: ThreeLevelAtom) -> list[np.ndarray]:
    """Collapse operators for energy relaxation and pure dephasing.

    Zero-rate channels are omitted so the Liouvillian stays minimal.
    """
    ops: list[np.ndarray] = []
    if atom.Gamma10 > 0.0:
        op = np.zeros((_DIM, _DIM), dtype=complex)
        op[0, 1] = np.sqrt(atom.Gamma10)
        ops.append(op)
    if atom.Gamma21 > 0.0:
        op = np.zeros((_DIM, _DIM), dtype=complex)
        op[1, 2] = np.sqrt(atom.Gamma21)
        ops.append(op)
    if atom.gphi1 > 0.0:
        op = np.zeros((_DIM, _DIM), dtype=complex)
        op[1, 1] = np.sqrt(2.0 * atom.gphi1)
        ops.append(op)
    if atom.gphi2 > 0.0:
        op = np.zeros((_DIM, _DIM), dtype=complex)
        op[2, 2] = np.sqrt(2.0 * atom.gphi2)
        ops.append(op)
    return ops


def build_liouvillian(h: np.ndarray, jumps: Sequence[np.ndarray]) -> np.ndarray:
    """Column-stacked Liouvillian matrix L with d vec(rho)/dt = L vec(rho)."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (_DIM, _DIM):
        raise ValueError("hamiltonian must be 3x3")
    eye = np.eye(_DIM)
    lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for op in jumps:
        op = np.asarray(op, dtype=complex)
        if op.shape != (_DIM, _DIM):
            raise ValueError("jump operators must be 3x3")
        opdag_op = op.conj().T @ op
        lv += (
            np.kron(op.conj(), op)
            - 0.5 * np.kron(eye, opdag_op)
            - 0.5 * np.kron(opdag_op.T, eye)
        )
    return lv


@dataclass(frozen=True)
class LiouvillianSpec:
    """Hamiltonian plus jump operators, bundled for reuse."""

    hamiltonian: np.ndarray
    jumps: tuple[np.ndarray, ...] = field(default_factory=tuple)

    @classmethod
    def from_atom_drive(cls, atom: ThreeLevelAtom, drive: DriveCondition) -> "LiouvillianSpec":
        return cls(hamiltonian=hamiltonian(atom, drive), jumps=tuple(jump_operators(atom)))

    def matrix(self) -> np.ndarray:
        return build_liouvillian(self.hamiltonian, self.jumps)


def _vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def _unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(_DIM, _DIM, order="F")


def steady_state(liouvillian: np.ndarray, rtol: float = _RESIDUAL_RTOL) -> np.ndarray:
    """Unique steady-state density matrix of a 9x9 Liouvillian.

    The singular system L v = 0 is closed by replacing the first row with
    the trace constraint tr(rho) = 1. If the replaced system is singular or
    the solution does not satisfy L v ~ 0 (non-unique steady state, e.g. a
    level decoupled by vanishing drive and decay), SteadyStateError is
    raised rather than returning one arbitrary kernel vector.
    """
    lv = np.asarray(liouvillian, dtype=complex)
    if lv.shape != (_DIM * _DIM, _DIM * _DIM):
        raise ValueError("liouvillian must be 9x9")
    mat = lv.copy()
    mat[0, :] = 0.0
    # trace row: diagonal entries of rho sit at column-stacked indices 0, 4, 8
    mat[0, 0] = mat[0, 4] = mat[0, 8] = 1.0
    rhs = np.zeros(_DIM * _DIM, dtype=complex)
    rhs[0] = 1.0
    try:
        v = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SteadyStateError("steady state is not unique: trace-closed system is singular") from exc
    scale = np.linalg.norm(lv)
    residual = np.linalg.norm(lv @ v)
    if not np.isfinite(residual) or residual > rtol * max(scale, 1.0):
        raise SteadyStateError(
            f"steady-state residual {residual:.3e} exceeds {rtol:.1e} * liouvillian norm"
        )
    rho = _unvec(v)
    # enforce exact hermiticity; the solve leaves rounding-level asymmetry
    rho = 0.5 * (rho + rho.conj().T)
    return rho


def steady_state_density_matrix(atom: ThreeLevelAtom, drive: DriveCondition) -> np.ndarray:
    """Steady state straight from physical parameters."""
    return steady_state(LiouvillianSpec.from_atom_drive(atom, drive).matrix())


def validate_density_matrix(rho: np.ndarray, atol: float = 1e-10) -> None:
    """Raise ValueError unless rho is hermitian, unit-trace, and PSD."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (_DIM, _DIM):
        raise ValueError("density matrix must be 3x3")
    if np.linalg.norm(rho - rho.conj().T) > atol:
        raise ValueError("density matrix is not hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise ValueError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise ValueError("density matrix has a negative eigenvalue")


def reflection_from_state(rho: np.ndarray, Gamma10: float, Omega_p: float) -> complex:
    """Reflection coefficient read off the steady-state 1-0 coherence.

    The scattered field is proportional to the lowering-operator expectation;
    normalizing by the probe amplitude gives r = -i (Gamma10 / Omega_p) rho_10.
    """
    if Omega_p <= 0.0:
        raise ValueError("Omega_p must be positive to define a reflection")
    return -1j * (Gamma10 / Omega_p) * complex(rho[1, 0])


def master_equation_reflection(atom: ThreeLevelAtom, drive: DriveCondition) -> complex:
    """Nonperturbative reflection coefficient from the steady state."""
    rho = steady_state_density_matrix(atom, drive)
    return reflection_from_state(rho, atom.Gamma10, drive.Omega_p)


class DeviationReport(NamedTuple):
    """Worst-case disagreement between master equation and closed form."""

    max_abs: float
    max_rel: float
    points: int


def weak_probe_deviation(
    atom: ThreeLevelAtom,
    Delta_p_values: Sequence[float],
    Delta_c_values: Sequence[float],
    Omega_c_values: Sequence[float],
    Omega_p: float = 2.0 * np.pi * 1.0e4,
) -> DeviationReport:
    """Compare the steady-state reflection to the weak-probe formula.

    Evaluates both on the Cartesian product of the supplied detuning and
    control-amplitude grids at a fixed small probe amplitude, and returns
    the largest absolute and relative deviations. Relative deviation at a
    point is |r_me - r_wp| / max(|r_wp|, 1e-30).
    """
    if Omega_p <= 0.0:
        raise ValueError("Omega_p must be positive")
    if len(Delta_p_values) == 0 or len(Delta_c_values) == 0 or len(Omega_c_values) == 0:
        raise ValueError("deviation grid must be nonempty in every axis")
    max_abs = 0.0
    max_rel = 0.0
    points = 0
    for omega_c in Omega_c_values:
        for delta_c in Delta_c_values:
            for delta_p in Delta_p_values:
                drive = DriveCondition(
                    Delta_p=float(delta_p),
                    Delta_c=float(delta_c),
                    Omega_p=float(Omega_p),
                    Omega_c=float(omega_c),
                )
                r_me = master_equation_reflection(atom, drive)
                r_wp = reflection(atom, drive)
                dev = abs(r_me - r_wp)
                max_abs = max(max_abs, dev)
                max_rel = max(max_rel, dev / max(abs(r_wp), 1e-30))
                points += 1
    return DeviationReport(max_abs=max_abs, max_rel=max_rel, points=points)


def propagate(
    liouvillian: np.ndarray,
    rho0: np.ndarray,
    times: Sequence[float],
) -> np.ndarray:
    """Evolve rho0 under the master equation; returns (len(times), 3, 3).

    Uses the dense matrix exponential per requested time, which is exact for
    this 9-dimensional generator and fast enough for diagnostics and tests.
    """
    lv = np.asarray(liouvillian, dtype=complex)
    v0 = _vec(rho0)
    out = np.empty((len(times), _DIM, _DIM), dtype=complex)
    for i, t in enumerate(times):
        if t < 0.0:
            raise ValueError("times must be nonnegative")
        out[i] = _unvec(expm(lv * float(t)) @ v0)
    return out
