import logging
import math
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from typing import Any, Dict, Union

import numpy as np
from scipy import optimize, special, stats

from spad_sim.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# golden-section bracket for the per-frame information shape g(λ)
LAMBDA_SEARCH_BRACKET = (0.1, 1.6, 10.0)


@dataclass(frozen=True)
class SensorConfig:
    """
    SPAD sensor parameters.

    eta folds quantum efficiency and fill factor into one effective detection
    efficiency; they only ever enter the likelihood as a product.
    """

    eta: float = 0.5
    dark_rate: float = 100.0
    tau_bin: float = 1e-5
    width: int = 64
    height: int = 64

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.dark_rate >= 0 or not math.isfinite(self.dark_rate):
            raise DomainError(f"dark_rate must be finite and >= 0, got {self.dark_rate}")
        if not self.tau_bin > 0 or not math.isfinite(self.tau_bin):
            raise DomainError(f"tau_bin must be finite and > 0, got {self.tau_bin}")
        if int(self.width) < 1 or int(self.height) < 1:
            raise DomainError(f"sensor geometry must be at least 1x1, got {self.width}x{self.height}")

    @property
    def shape(self):
        return (int(self.height), int(self.width))

    def with_changes(self, **changes) -> "SensorConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SensorConfig":
        known = {k: data[k] for k in ("eta", "dark_rate", "tau_bin", "width", "height") if k in data}
        return cls(**known)


@dataclass(frozen=True)
class PhotonStatistics:
    lam: float
    p_detect: float


@dataclass(frozen=True)
class FluxEstimate:
    """
    Maximum-likelihood flux for one pixel (floats) or a whole image (arrays).

    When saturated, phi_hat holds the floor obtained from n = N - 1 and
    ci_high is +inf.
    """

    phi_hat: ArrayLike
    saturated: ArrayLike
    ci_low: ArrayLike
    ci_high: ArrayLike
    n_detections: ArrayLike
    n_frames: ArrayLike
    total_rate: ArrayLike

    @property
    def p_hat(self) -> ArrayLike:
        return np.asarray(self.n_detections) / np.asarray(self.n_frames)


def _check_flux(phi: ArrayLike) -> np.ndarray:
    arr = np.asarray(phi, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("photon flux must be finite and >= 0")
    return arr


def _scalar_or_array(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


def poisson_pmf(k: int, lam: float) -> float:
    """P(x = k) for a Poisson count with mean lam, evaluated in log space."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    if not math.isfinite(lam) or lam < 0:
        raise DomainError(f"lambda must be finite and >= 0, got {lam}")
    log_pmf = special.xlogy(k, lam) - lam - special.gammaln(k + 1)
    return float(np.exp(log_pmf))


def expected_detections(phi: float, cfg: SensorConfig) -> PhotonStatistics:
    lam = detections_per_frame(phi, cfg)
    return PhotonStatistics(lam=float(lam), p_detect=float(-np.expm1(-lam)))


def detections_per_frame(phi: ArrayLike, cfg: SensorConfig, tau_bin: float = None) -> ArrayLike:
    """λ = (φη + r_d)τ, element-wise."""
    tau = cfg.tau_bin if tau_bin is None else tau_bin
    arr = _check_flux(phi)
    return _scalar_or_array((arr * cfg.eta + cfg.dark_rate) * tau)


def detection_probability(phi: ArrayLike, cfg: SensorConfig, tau_bin: float = None) -> ArrayLike:
    lam = np.asarray(detections_per_frame(phi, cfg, tau_bin))
    return _scalar_or_array(-np.expm1(-lam))


def flux_from_detection_probability(p: ArrayLike, cfg: SensorConfig) -> ArrayLike:
    """
    Inverse of the Bernoulli detection model with dark-count correction.

    The total rate -ln(1 - p)/τ has the dark rate subtracted and is divided
    by eta; negative results clamp to 0. p = 1 maps to +inf.
    """
    arr = np.asarray(p, dtype=np.float64)
    if np.any((arr < 0) | (arr > 1)):
        raise DomainError("detection probability must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        rate = -np.log1p(-arr) / cfg.tau_bin
    phi = np.maximum(0.0, (rate - cfg.dark_rate) / cfg.eta)
    return _scalar_or_array(phi)


def wilson_interval(n: ArrayLike, n_frames: ArrayLike, confidence: float = 0.95):
    """Wilson score interval on p̂ = n/N; returns (low, high)."""
    if not 0 < confidence < 1:
        raise DomainError(f"confidence must lie in (0, 1), got {confidence}")
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    n = np.asarray(n, dtype=np.float64)
    total = np.asarray(n_frames, dtype=np.float64)
    p_hat = n / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p_hat + z2 / (2.0 * total)) / denom
    half = (z / denom) * np.sqrt(p_hat * (1.0 - p_hat) / total + z2 / (4.0 * total * total))
    low = np.clip(center - half, 0.0, 1.0)
    high = np.clip(center + half, 0.0, 1.0)
    # the interval always contains p̂; pin the endpoints against round-off
    return np.minimum(low, p_hat), np.maximum(high, p_hat)


def _check_counts(n: ArrayLike, n_frames: ArrayLike):
    n_arr = np.asarray(n)
    total = np.asarray(n_frames)
    if np.any(total < 1):
        raise DomainError("frame count N must be >= 1")
    if np.any(n_arr < 0) or np.any(n_arr > total):
        raise DomainError("detection count must satisfy 0 <= n <= N")
    return n_arr.astype(np.int64), total.astype(np.int64)


def mle_flux_array(n: ArrayLike, n_frames: ArrayLike, cfg: SensorConfig, confidence: float = 0.95) -> FluxEstimate:
    """Vectorized dark-count-corrected MLE with Wilson bounds."""
    n_arr, total = np.broadcast_arrays(*_check_counts(n, n_frames))
    saturated = n_arr == total

    # saturated pixels carry the n = N - 1 floor
    effective = np.where(saturated, total - 1, n_arr)
    p_hat = effective / total
    with np.errstate(divide="ignore"):
        total_rate = -np.log1p(-p_hat) / cfg.tau_bin
    phi_hat = flux_from_detection_probability(p_hat, cfg)

    p_low, p_high = wilson_interval(n_arr, total, confidence)
    ci_low = flux_from_detection_probability(p_low, cfg)
    ci_high = flux_from_detection_probability(p_high, cfg)
    ci_high = np.where(saturated, np.inf, ci_high)

    return FluxEstimate(
        phi_hat=np.asarray(phi_hat, dtype=np.float64),
        saturated=saturated,
        ci_low=np.asarray(ci_low, dtype=np.float64),
        ci_high=np.asarray(ci_high, dtype=np.float64),
        n_detections=n_arr,
        n_frames=total,
        total_rate=total_rate,
    )


def mle_flux(n: int, n_frames: int, cfg: SensorConfig, confidence: float = 0.95) -> FluxEstimate:
    if n_frames < 1:
        raise DomainError(f"frame count N must be >= 1, got {n_frames}")
    if not 0 <= n <= n_frames:
        raise DomainError(f"detection count must satisfy 0 <= n <= N, got n={n}, N={n_frames}")

    est = mle_flux_array(np.asarray(n), np.asarray(n_frames), cfg, confidence)
    return FluxEstimate(
        phi_hat=float(est.phi_hat),
        saturated=bool(est.saturated),
        ci_low=float(est.ci_low),
        ci_high=float(est.ci_high),
        n_detections=int(n),
        n_frames=int(n_frames),
        total_rate=float(est.total_rate),
    )


def log_likelihood(phi: ArrayLike, n: ArrayLike, n_frames: ArrayLike, cfg: SensorConfig, tau_bin: float = None) -> ArrayLike:
    """Bernoulli log-likelihood of n detections in N frames at flux phi."""
    lam = np.asarray(detections_per_frame(phi, cfg, tau_bin))
    n = np.asarray(n, dtype=np.float64)
    total = np.asarray(n_frames, dtype=np.float64)
    with np.errstate(divide="ignore"):
        value = special.xlogy(n, -np.expm1(-lam)) - (total - n) * lam
    return _scalar_or_array(value)


def fisher_information_per_frame(phi: ArrayLike, cfg: SensorConfig) -> ArrayLike:
    """
    I(φ) = (ητ)² e^(−λ)/(1 − e^(−λ)) per binary frame.

    At λ = 0 (no light, no dark counts) the information diverges; the result
    is +inf, which callers treat as the degenerate case.
    """
    lam = np.asarray(detections_per_frame(phi, cfg))
    with np.errstate(divide="ignore"):
        info = (cfg.eta * cfg.tau_bin) ** 2 / np.expm1(lam)
    if np.any(lam == 0):
        logger.debug("Fisher information is degenerate at lambda = 0")
    return _scalar_or_array(info)


def information_shape(lam: ArrayLike) -> ArrayLike:
    """g(λ) = λ² e^(−λ)/(1 − e^(−λ)); its argmax fixes the optimal exposure."""
    lam = np.asarray(lam, dtype=np.float64)
    return _scalar_or_array(lam * lam / np.expm1(lam))


@lru_cache(maxsize=None)
def optimal_lambda() -> float:
    result = optimize.minimize_scalar(
        lambda lam: -information_shape(lam),
        bracket=LAMBDA_SEARCH_BRACKET,
        method="golden",
        tol=1e-10,
    )
    lam_star = float(result.x)
    logger.debug(f"Optimal detections per frame: {lam_star:.6f}")
    return lam_star


def optimal_binary_exposure(phi_guess: float, cfg: SensorConfig) -> float:
    """Binary exposure τ* that puts the pixel at λ = λ*."""
    if not math.isfinite(phi_guess) or phi_guess < 0:
        raise DomainError(f"flux guess must be finite and >= 0, got {phi_guess}")
    rate = phi_guess * cfg.eta + cfg.dark_rate
    if rate <= 0:
        raise DomainError("total detection rate is zero; no finite optimal exposure exists")
    return optimal_lambda() / rate
