"""Parameter extraction from swept scattering data.

Five estimators mirror the measurement analysis chain:

- ``fit_dip_lorentzian``: Lorentzian dip in |r|^2 versus control detuning;
  its half width at half maximum is the transparency-window linewidth.
- ``fit_linewidth_line``: weighted straight line of linewidth versus control
  power, returning the intrinsic coherence rate (intercept) and the
  power-to-Rabi-squared calibration constant (slope times 4*gamma10).
- ``rabi_per_point``: per-power control Rabi frequency with propagated error
  bars, inverting the linewidth relation.
- ``fit_two_level``: probe-only lineshape giving the probe-transition
  coherence rate.
- ``fit_transmission``: full transmission model fit (complex or magnitude)
  with a constant electrical-crosstalk background.

All estimators run on the in-package damped least-squares engine and return
its FitResult. Inputs are angular frequencies (rad/s) and watts; unit
conversion happens at the program boundary, not here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, RankError
from .leastsq import FitResult, levenberg_marquardt, weighted_linear_fit
from .model import transmission_flux_coefficient


@dataclass(frozen=True)
class SweepSample:
    """One measured point: abscissa, value (real or complex), optional sigma."""

    x: float
    value: complex
    sigma: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.x):
            raise ValueError("sample abscissa must be finite")
        if not (math.isfinite(self.value.real) and math.isfinite(self.value.imag)):
            raise ValueError("sample value must be finite")
        if self.sigma is not None and not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError("sample sigma must be positive and finite when present")


def samples_from_arrays(x, values, sigma=None) -> list[SweepSample]:
    """Bundle parallel arrays into SweepSample records."""
    x = np.asarray(x, dtype=float)
    values = np.asarray(values)
    if sigma is None:
        return [SweepSample(float(a), complex(v)) for a, v in zip(x, values)]
    sigma = np.asarray(sigma, dtype=float)
    return [SweepSample(float(a), complex(v), float(s)) for a, v, s in zip(x, values, sigma)]


def _unpack(samples: Sequence[SweepSample]) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    x = np.array([s.x for s in samples], dtype=float)
    values = np.array([s.value for s in samples], dtype=complex)
    sigmas = [s.sigma for s in samples]
    if all(s is None for s in sigmas):
        return x, values, None
    if any(s is None for s in sigmas):
        raise ValueError("either all samples carry sigma or none do")
    return x, values, np.array(sigmas, dtype=float)


def _require_converged(result: FitResult, what: str) -> FitResult:
    if not result.converged:
        raise ConvergenceError(
            f"{what} did not converge after {result.iterations} iterations "
            f"(gradient norm {result.gradient_norm:.3e}, rss {result.rss:.3e})"
        )
    return result


# ---------------------------------------------------------------------------
# Lorentzian dip in |r|^2 versus control detuning
# ---------------------------------------------------------------------------


def fit_dip_lorentzian(samples: Sequence[SweepSample]) -> FitResult:
    """Fit baseline - depth * hwhm^2 / ((x - center)^2 + hwhm^2).

    Weighted least squares when samples carry sigma. Constant data leaves the
    width and center unidentifiable: the baseline is then reported exactly
    and the result is flagged instead of iterated.
    """
    if len(samples) < 5:
        raise ValueError("need at least 5 samples spanning the dip")
    x, values, sigma = _unpack(samples)
    y = values.real
    if np.any(np.abs(values.imag) > 0.0):
        raise ValueError("dip samples must be real (|r|^2 values)")
    w = np.ones_like(y) if sigma is None else 1.0 / sigma

    span = float(np.ptp(y))
    if span <= 1e-14 * max(float(np.max(np.abs(y))), 1.0):
        baseline = float(np.mean(y))
        resid = (y - baseline) * w
        return FitResult(
            names=("center", "hwhm", "depth", "baseline"),
            values=np.array([float(np.mean(x)), np.nan, 0.0, baseline]),
            stderr=np.array([np.nan, np.nan, np.nan, 0.0]),
            covariance=None,
            rss=float(resid @ resid),
            iterations=0,
            converged=True,
            at_bound=(False, False, False, False),
            gradient_norm=0.0,
            notes=("degenerate:constant-data", "hwhm-unidentifiable"),
        )

    # initial guesses come from a lightly smoothed curve so shallow dips under
    # noise do not seed a zero-width spike through a single outlier
    order = np.argsort(x)
    window = max(3, len(y) // 25)
    if window % 2 == 0:
        window += 1
    kernel = np.ones(window) / window
    y_smooth = np.empty_like(y)
    y_smooth[order] = np.convolve(np.pad(y[order], window // 2, mode="edge"), kernel, mode="valid")
    baseline0 = float(np.max(y_smooth))
    i_min = int(np.argmin(y_smooth))
    center0 = float(x[i_min])
    depth0 = baseline0 - float(y_smooth[i_min])
    below = y_smooth < baseline0 - 0.5 * depth0
    if np.count_nonzero(below) >= 2:
        hwhm0 = 0.5 * float(np.ptp(x[below]))
    else:
        hwhm0 = 0.125 * float(np.ptp(x))
    hwhm0 = max(hwhm0, 1e-3 * float(np.ptp(x)))

    def model_and_parts(theta: np.ndarray):
        center, hwhm, depth, baseline = theta
        dx = x - center
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = dx * dx + hwhm * hwhm
            lor = np.where(denom > 0.0, hwhm * hwhm / denom, 1.0)
            f = baseline - depth * lor
        return f, dx, denom, lor

    def residual(theta: np.ndarray) -> np.ndarray:
        f, _, _, _ = model_and_parts(theta)
        return (f - y) * w

    def jacobian(theta: np.ndarray) -> np.ndarray:
        center, hwhm, depth, _ = theta
        _, dx, denom, lor = model_and_parts(theta)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            denom2 = denom * denom
            d_center = -depth * 2.0 * hwhm * hwhm * dx / denom2
            d_hwhm = -depth * 2.0 * hwhm * dx * dx / denom2
        d_center = np.where(np.isfinite(d_center), d_center, 0.0)
        d_hwhm = np.where(np.isfinite(d_hwhm), d_hwhm, 0.0)
        d_depth = -lor
        d_baseline = np.ones_like(dx)
        jac = np.column_stack([d_center, d_hwhm, d_depth, d_baseline])
        return jac * w[:, None]

    result = levenberg_marquardt(
        residual,
        np.array([center0, hwhm0, depth0, baseline0]),
        jacobian,
        names=("center", "hwhm", "depth", "baseline"),
        lower=np.array([-np.inf, 0.0, -np.inf, -np.inf]),
    )
    result = _require_converged(result, "dip fit")
    # collapse onto the width bound means the optimum is a zero-width spike,
    # not a resolved dip; mark the width unidentifiable for downstream filters
    if result.value("hwhm") <= 0.0:
        result = result.with_notes("hwhm-unidentifiable")
    return result


# ---------------------------------------------------------------------------
# Linewidth versus power line and per-point control Rabi frequency
# ---------------------------------------------------------------------------


def fit_linewidth_line(
    powers_watts: Sequence[float],
    gamma_eit: Sequence[float],
    sigma: Sequence[float] | None = None,
    *,
    gamma10: float,
) -> FitResult:
    """Weighted fit of gamma_eit = gamma20 + (k / (4 * gamma10)) * P.

    Returns gamma20 (intercept, rad/s) and the calibration constant k
    ((rad/s)^2 per watt) with standard errors. gamma10 comes from an
    independent probe-only measurement and is treated as exact.
    """
    powers = np.asarray(powers_watts, dtype=float)
    widths = np.asarray(gamma_eit, dtype=float)
    if powers.ndim != 1 or powers.shape != widths.shape:
        raise ValueError("powers and linewidths must be 1-d arrays of equal length")
    if powers.size < 3:
        raise ValueError("need at least 3 points")
    if np.unique(powers).size < 2:
        raise RankError("need at least 2 distinct powers to fit a line")
    if gamma10 <= 0.0:
        raise ValueError("gamma10 must be positive")
    line = weighted_linear_fit(powers, widths, sigma, names=("gamma20", "slope"))
    scale = 4.0 * gamma10
    values = np.array([line.values[0], scale * line.values[1]])
    stderr = np.array([line.stderr[0], scale * line.stderr[1]])
    covariance = None
    if line.covariance is not None:
        transform = np.diag([1.0, scale])
        covariance = transform @ line.covariance @ transform.T
    return FitResult(
        names=("gamma20", "k"),
        values=values,
        stderr=stderr,
        covariance=covariance,
        rss=line.rss,
        iterations=line.iterations,
        converged=line.converged,
        at_bound=(False, False),
        gradient_norm=line.gradient_norm,
    )


class RabiPoint(NamedTuple):
    """Control Rabi frequency at one power with its propagated error bar.

    one_sided marks points whose linewidth does not exceed the intrinsic
    rate: there the inversion floors at zero and sigma is the one-standard-
    deviation upper bound sqrt(4 * gamma10 * sigma_gamma) instead of the
    (divergent) first-order propagation.
    """

    omega_c: float
    sigma: float
    one_sided: bool


def rabi_per_point(
    fit: FitResult | float,
    gamma_eit: Sequence[float],
    sigma_gamma: Sequence[float] | None = None,
    *,
    gamma10: float,
) -> list[RabiPoint]:
    """Invert the linewidth relation per point: Omega_c = sqrt(4*gamma10*(gamma_eit - gamma20)).

    fit is either the line-fit result carrying gamma20 or a bare gamma20
    value. Error bars use first-order propagation sigma = 2*gamma10*sigma_gamma/Omega_c.
    """
    gamma20 = fit.value("gamma20") if isinstance(fit, FitResult) else float(fit)
    if gamma10 <= 0.0:
        raise ValueError("gamma10 must be positive")
    if gamma20 < 0.0:
        raise ValueError("gamma20 must be nonnegative")
    widths = np.asarray(gamma_eit, dtype=float)
    if sigma_gamma is None:
        sigmas = np.zeros_like(widths)
    else:
        sigmas = np.asarray(sigma_gamma, dtype=float)
        if sigmas.shape != widths.shape:
            raise ValueError("sigma_gamma must match gamma_eit in length")
    out: list[RabiPoint] = []
    for width, sig in zip(widths, sigmas):
        excess = width - gamma20
        if excess <= 0.0:
            out.append(RabiPoint(0.0, math.sqrt(4.0 * gamma10 * sig), True))
            continue
        omega_c = math.sqrt(4.0 * gamma10 * excess)
        out.append(RabiPoint(omega_c, 2.0 * gamma10 * sig / omega_c, False))
    return out


# ---------------------------------------------------------------------------
# Probe-only two-level lineshape
# ---------------------------------------------------------------------------


def fit_two_level(samples: Sequence[SweepSample], *, Gamma10: float) -> FitResult:
    """Fit |r| = scale * (Gamma10/2) / sqrt(gamma10^2 + Delta_p^2).

    Gamma10 multiplies the same factor as scale, so it is supplied from an
    independent calibration and reported as a fixed parameter with zero
    uncertainty; gamma10 and scale are fitted.
    """
    if len(samples) < 5:
        raise ValueError("need at least 5 samples")
    if Gamma10 <= 0.0:
        raise ValueError("Gamma10 must be positive")
    x, values, sigma = _unpack(samples)
    y = values.real
    if np.any(np.abs(values.imag) > 0.0):
        raise ValueError("two-level samples must be real (|r| values)")
    w = np.ones_like(y) if sigma is None else 1.0 / sigma

    amp0 = float(np.max(y))
    if amp0 <= 0.0:
        raise ValueError("samples must contain positive magnitudes")
    half = y >= 0.5 * amp0
    if np.count_nonzero(half) >= 2:
        # |r| falls to half its peak at |Delta_p| = sqrt(3) * gamma10
        gamma0 = 0.5 * float(np.ptp(x[half])) / math.sqrt(3.0)
    else:
        gamma0 = 0.125 * float(np.ptp(x))
    gamma0 = max(gamma0, 1e-3 * float(np.ptp(x)))
    scale0 = amp0 * 2.0 * gamma0 / Gamma10

    def residual(theta: np.ndarray) -> np.ndarray:
        gamma, scale = theta
        f = scale * (0.5 * Gamma10) / np.sqrt(gamma * gamma + x * x)
        return (f - y) * w

    def jacobian(theta: np.ndarray) -> np.ndarray:
        gamma, scale = theta
        root = np.sqrt(gamma * gamma + x * x)
        d_gamma = -scale * (0.5 * Gamma10) * gamma / root**3
        d_scale = (0.5 * Gamma10) / root
        return np.column_stack([d_gamma, d_scale]) * w[:, None]

    fit = levenberg_marquardt(
        residual,
        np.array([gamma0, scale0]),
        jacobian,
        names=("gamma10", "scale"),
        lower=np.array([0.0, -np.inf]),
    )
    fit = _require_converged(fit, "two-level fit")

    # widen to the documented three-parameter report with Gamma10 fixed
    covariance = None
    if fit.covariance is not None:
        covariance = np.zeros((3, 3))
        covariance[0, 0] = fit.covariance[0, 0]
        covariance[0, 2] = covariance[2, 0] = fit.covariance[0, 1]
        covariance[2, 2] = fit.covariance[1, 1]
    return FitResult(
        names=("gamma10", "Gamma10", "scale"),
        values=np.array([fit.values[0], Gamma10, fit.values[1]]),
        stderr=np.array([fit.stderr[0], 0.0, fit.stderr[1]]),
        covariance=covariance,
        rss=fit.rss,
        iterations=fit.iterations,
        converged=fit.converged,
        at_bound=(fit.at_bound[0], False, fit.at_bound[1]),
        gradient_norm=fit.gradient_norm,
        notes=fit.notes + ("fixed:Gamma10",),
    )


# ---------------------------------------------------------------------------
# Transmission model with crosstalk background
# ---------------------------------------------------------------------------

_TRANSMISSION_NAMES = ("gamma20", "delta", "Omega_c", "scale", "crosstalk_re", "crosstalk_im")


def transmission_initial_guess(
    samples: Sequence[SweepSample],
    *,
    gamma10: float,
    omega_c_hint: float | None = None,
) -> dict[str, float]:
    """Starting point for fit_transmission from a smoothed magnitude curve.

    Two resolved minima (split lineshape) give the control Rabi frequency
    from their separation and the two-photon offset from their midpoint; a
    single minimum gives the offset alone and the Rabi guess falls back to
    the supplied hint or half the probe linewidth.
    """
    x, values, _ = _unpack(samples)
    order = np.argsort(x)
    x = x[order]
    mag = np.abs(values)[order]
    win = max(3, len(mag) // 25)
    if win % 2 == 0:
        win += 1
    kernel = np.ones(win) / win
    smooth = np.convolve(mag, kernel, mode="same")
    edge = max(1, len(mag) // 10)
    baseline = float(np.median(np.concatenate([smooth[:edge], smooth[-edge:]])))

    interior = slice(1, len(smooth) - 1)
    is_min = (smooth[interior] < smooth[:-2]) & (smooth[interior] <= smooth[2:])
    min_idx = np.nonzero(is_min)[0] + 1
    if min_idx.size == 0:
        min_idx = np.array([int(np.argmin(smooth))])
    min_idx = min_idx[np.argsort(smooth[min_idx])]
    picks = [int(min_idx[0])]
    for idx in min_idx[1:]:
        if abs(int(idx) - picks[0]) > win:
            picks.append(int(idx))
            break

    if len(picks) == 2:
        xa, xb = float(x[picks[0]]), float(x[picks[1]])
        omega_c0 = abs(xa - xb)
        # split minima sit at -delta/2 +- Omega_c/2
        delta0 = -(xa + xb)
    else:
        delta0 = -2.0 * float(x[picks[0]])
        omega_c0 = omega_c_hint if omega_c_hint is not None else 0.5 * gamma10
    omega_c0 = max(float(omega_c0), 0.05 * gamma10)

    return {
        "gamma20": 0.25 * gamma10,
        "delta": float(delta0),
        "Omega_c": omega_c0,
        "scale": max(baseline, 1e-6),
        "crosstalk_re": 0.0,
        "crosstalk_im": 0.0,
    }


def fit_transmission(
    samples: Sequence[SweepSample],
    *,
    gamma10: float,
    Gamma10: float,
    init: dict[str, float] | None = None,
    fit_crosstalk: bool = True,
    omega_c_hint: float | None = None,
) -> FitResult:
    """Fit t = scale * (t_model(Delta_p) + c) to complex or magnitude data.

    t_model is the flux-sweep transmission with fixed probe rates (gamma10,
    Gamma10) and free gamma20, two-photon offset delta, and control Rabi
    frequency Omega_c; c = crosstalk_re + i*crosstalk_im is a constant
    electrical background and scale a real normalization. Complex samples are
    fitted in both quadratures; real samples are fitted in magnitude. With
    fit_crosstalk=False the background stays pinned at its initial value.

    The six-parameter landscape has secondary minima at large background, so
    a data-driven initial guess is used unless init overrides it.
    """
    if len(samples) < 8:
        raise ValueError("need at least 8 samples")
    if gamma10 <= 0.0 or Gamma10 <= 0.0:
        raise ValueError("probe rates must be positive")
    x, values, sigma = _unpack(samples)
    complex_data = bool(np.any(np.abs(values.imag) > 0.0))
    w = np.ones(x.size) if sigma is None else 1.0 / sigma

    guess = transmission_initial_guess(samples, gamma10=gamma10, omega_c_hint=omega_c_hint)
    if init:
        unknown = set(init) - set(_TRANSMISSION_NAMES)
        if unknown:
            raise ValueError(f"unknown initial-guess parameters: {sorted(unknown)}")
        guess.update({k: float(v) for k, v in init.items()})

    if fit_crosstalk:
        names = _TRANSMISSION_NAMES
        fixed_c = None
    else:
        names = _TRANSMISSION_NAMES[:4]
        fixed_c = complex(guess["crosstalk_re"], guess["crosstalk_im"])

    def model(theta: np.ndarray) -> np.ndarray:
        gamma20, delta, omega_c, scale = theta[:4]
        c = complex(theta[4], theta[5]) if fit_crosstalk else fixed_c
        t = transmission_flux_coefficient(
            Gamma10=Gamma10,
            gamma10=gamma10,
            gamma20=gamma20,
            Omega_c=omega_c,
            Delta_p=x,
            delta=delta,
        )
        return scale * (t + c)

    def residual(theta: np.ndarray) -> np.ndarray:
        t = model(theta)
        if complex_data:
            res = t - values
            return np.concatenate([res.real * w, res.imag * w])
        return (np.abs(t) - values.real) * w

    x0 = np.array([guess[name] for name in names])
    lower = np.full(len(names), -np.inf)
    lower[0] = 0.0  # gamma20
    lower[2] = 0.0  # Omega_c
    fit = levenberg_marquardt(residual, x0, names=names, lower=lower)
    fit = _require_converged(fit, "transmission fit")
    if fit_crosstalk:
        return fit

    # widen to the documented six-parameter report with the background pinned
    covariance = None
    if fit.covariance is not None:
        covariance = np.zeros((6, 6))
        covariance[:4, :4] = fit.covariance
    return FitResult(
        names=_TRANSMISSION_NAMES,
        values=np.concatenate([fit.values, [fixed_c.real, fixed_c.imag]]),
        stderr=np.concatenate([fit.stderr, [0.0, 0.0]]),
        covariance=covariance,
        rss=fit.rss,
        iterations=fit.iterations,
        converged=fit.converged,
        at_bound=fit.at_bound + (False, False),
        gradient_norm=fit.gradient_norm,
        notes=fit.notes + ("fixed:crosstalk",),
    )
