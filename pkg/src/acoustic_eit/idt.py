"""Interdigital transducer coupling envelope.

The transducer radiates into the surface with an acoustic conductance that
follows the classic sinc-squared array factor of its finger pattern,

    G_a(omega) = G_a0 * (sin X / X)**2,   X = pairs * pi * (omega - omega_center) / omega_center,

with the on-resonance value G_a0 = k2 * pairs * omega_center * capacitance.
The matching energy decay rate of a transmon shunted by the transducer is
Gamma_a = G_a / (2 * capacitance), so the peak decay rate
Gamma_a0 = 0.5 * k2 * pairs * omega_center needs no capacitance at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# below this |X| the direct quotient loses digits to cancellation; the Taylor
# polynomial is exact to double precision there
_SINC_TAYLOR_CUTOFF = 1e-4


@dataclass(frozen=True)
class IdtTransducer:
    """Transducer geometry and material coupling.

    pairs          number of finger periods (>= 1)
    omega_center   synchronous angular frequency (rad/s)
    k2             electromechanical coupling coefficient K^2 (dimensionless)
    capacitance    total electrode capacitance (F)
    inductance     optional shunt (SQUID) inductance (H), carried as metadata
    """

    pairs: int
    omega_center: float
    k2: float
    capacitance: float
    inductance: float | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.pairs, int) and self.pairs >= 1):
            raise ValueError("pairs must be an integer >= 1")
        if self.omega_center <= 0.0:
            raise ValueError("omega_center must be positive")
        if not (0.0 < self.k2 < 1.0):
            raise ValueError("k2 must lie in (0, 1)")
        if self.capacitance <= 0.0:
            raise ValueError("capacitance must be positive")
        if self.inductance is not None and self.inductance <= 0.0:
            raise ValueError("inductance, if given, must be positive")

    @property
    def conductance_peak(self) -> float:
        """G_a0 = k2 * pairs * omega_center * capacitance (siemens)."""
        return self.k2 * self.pairs * self.omega_center * self.capacitance

    @property
    def decay_peak(self) -> float:
        """Gamma_a0 = 0.5 * k2 * pairs * omega_center (rad/s)."""
        return 0.5 * self.k2 * self.pairs * self.omega_center


def _sinc(x):
    """sin(x)/x with a Taylor branch near zero. Array-safe."""
    if np.isscalar(x) or isinstance(x, float):
        ax = abs(x)
        if ax < _SINC_TAYLOR_CUTOFF:
            x2 = x * x
            return 1.0 - x2 / 6.0 + x2 * x2 / 120.0
        return math.sin(x) / x
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_TAYLOR_CUTOFF
    x2 = x * x
    taylor = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    # avoid 0/0 warnings on the branch not taken
    safe = np.where(small, 1.0, x)
    return np.where(small, taylor, np.sin(safe) / safe)


def detuning_parameter(idt: IdtTransducer, omega):
    """Array factor argument X = pairs * pi * (omega - omega_center) / omega_center."""
    return idt.pairs * math.pi * (omega - idt.omega_center) / idt.omega_center


def acoustic_conductance(idt: IdtTransducer, omega):
    """Radiation conductance G_a(omega) in siemens. Array-safe in omega."""
    if np.any(np.asarray(omega) <= 0.0):
        raise ValueError("omega must be positive")
    return idt.conductance_peak * _sinc(detuning_parameter(idt, omega)) ** 2


def decay_from_conductance(conductance, capacitance: float):
    """Gamma_a = G_a / (2 * C_t)."""
    if capacitance <= 0.0:
        raise ValueError("capacitance must be positive")
    if np.any(np.asarray(conductance) < 0.0):
        raise ValueError("conductance must be nonnegative")
    return conductance / (2.0 * capacitance)


def coupling_rate(idt: IdtTransducer, omega):
    """Acoustic energy decay rate Gamma_a(omega) = Gamma_a0 * sinc(X)**2 (rad/s)."""
    if np.any(np.asarray(omega) <= 0.0):
        raise ValueError("omega must be positive")
    return idt.decay_peak * _sinc(detuning_parameter(idt, omega)) ** 2


def idt_bandwidth(idt: IdtTransducer) -> float:
    """Fractional main-lobe bandwidth 0.9 * omega_center / pairs (rad/s)."""
    return 0.9 * idt.omega_center / idt.pairs
