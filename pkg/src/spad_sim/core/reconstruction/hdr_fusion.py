"""
Joint maximum-likelihood fusion of binary frames taken at several exposures.

Per pixel the log-likelihood over the detection rate ρ = φη + r_d is

    ℓ(ρ) = Σ_j n_j ln(1 − e^(−ρτ_j)) − (N_j − n_j) ρ τ_j

which is concave. It is maximized with Newton steps kept inside a
shrinking sign bracket, falling back to bisection whenever a step would
leave it. All pixels are solved together as arrays.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from spad_sim.core.bitstream import CountImage, accumulate, read_stream
from spad_sim.core.photon_model import SensorConfig, flux_from_detection_probability, log_likelihood
from spad_sim.core.simulator.flux_map import FluxMap
from spad_sim.errors import DimensionMismatchError, DomainError

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 100
RELATIVE_STEP_TOL = 1e-10
BRACKET_EXPANSION = 10.0
MAX_EXPANSIONS = 40
DR_PERCENTILES = (99.9, 0.1)

# labels of the PGM mask image
MASK_VALID, MASK_SATURATED, MASK_UNDERFLOW, MASK_NONCONVERGED = 0, 1, 2, 3


@dataclass(frozen=True)
class ExposureEntry:
    counts: CountImage
    tau_bin: float

    @property
    def n_frames(self) -> int:
        return self.counts.n_frames


@dataclass(frozen=True)
class ExposureStack:
    entries: Tuple[ExposureEntry, ...]
    eta: float
    dark_rate: float

    def __post_init__(self):
        if not self.entries:
            raise DomainError("exposure stack is empty")
        shapes = {entry.counts.counts.shape for entry in self.entries}
        if len(shapes) != 1:
            raise DimensionMismatchError(f"exposure stack mixes image shapes {sorted(shapes)}")
        for entry in self.entries:
            # validates tau_bin, eta and dark_rate together
            self.sensor_config(entry)
        taus = [entry.tau_bin for entry in self.entries]
        if len(set(taus)) != len(taus):
            logger.warning(f"exposure stack repeats binary exposures {taus}")

    @classmethod
    def build(cls, counts: Sequence[CountImage], taus: Sequence[float], eta: float, dark_rate: float) -> "ExposureStack":
        if len(counts) != len(taus):
            raise DomainError(f"{len(counts)} count images but {len(taus)} exposures")
        entries = tuple(ExposureEntry(ci, float(tau)) for ci, tau in zip(counts, taus))
        return cls(entries=entries, eta=float(eta), dark_rate=float(dark_rate))

    @classmethod
    def from_streams(cls, paths: Sequence[Union[str, Path]], workers: int = 1) -> "ExposureStack":
        """Accumulate every frame of each stream; sensors must agree on eta and dark rate."""
        counts: List[CountImage] = []
        taus: List[float] = []
        eta = dark_rate = None
        for path in paths:
            stream = read_stream(path)
            header = stream.header
            if eta is None:
                eta, dark_rate = header.eta, header.dark_rate
            elif (header.eta, header.dark_rate) != (eta, dark_rate):
                raise DomainError(f"{path}: eta/dark_rate differ from the first stream")
            counts.append(accumulate(stream, workers=workers))
            taus.append(header.tau_bin)
        return cls.build(counts, taus, eta, dark_rate)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries[0].counts.counts.shape

    def sensor_config(self, entry: ExposureEntry) -> SensorConfig:
        height, width = self.shape
        return SensorConfig(eta=self.eta, dark_rate=self.dark_rate, tau_bin=entry.tau_bin, width=width, height=height)


@dataclass(frozen=True)
class HdrResult:
    flux: FluxMap
    saturated_mask: np.ndarray
    underflow_mask: np.ndarray
    nonconverged_mask: np.ndarray
    iterations: np.ndarray
    dynamic_range_db: Optional[float] = None

    @property
    def valid_mask(self) -> np.ndarray:
        return ~(self.saturated_mask | self.underflow_mask | self.nonconverged_mask)

    def mask_labels(self) -> np.ndarray:
        labels = np.full(self.saturated_mask.shape, MASK_VALID, dtype=np.uint8)
        labels[self.saturated_mask] = MASK_SATURATED
        labels[self.underflow_mask] = MASK_UNDERFLOW
        labels[self.nonconverged_mask] = MASK_NONCONVERGED
        return labels

    def solver_stats(self) -> Dict[str, Any]:
        solved = self.iterations[self.iterations > 0]
        return {
            "pixels": int(self.iterations.size),
            "saturated": int(self.saturated_mask.sum()),
            "underflow": int(self.underflow_mask.sum()),
            "nonconverged": int(self.nonconverged_mask.sum()),
            "iterations_max": int(solved.max()) if solved.size else 0,
            "iterations_mean": float(solved.mean()) if solved.size else 0.0,
            "dynamic_range_db": self.dynamic_range_db,
        }


def _score(rho: np.ndarray, n: np.ndarray, total: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """ℓ'(ρ) for rate vector ρ against per-exposure rows n, N, τ."""
    x = rho[None, :] * tau
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        fired = np.where(n > 0, n * tau / np.expm1(x), 0.0)
    return (fired - (total - n) * tau).sum(axis=0)


def _curvature(rho: np.ndarray, n: np.ndarray, tau: np.ndarray) -> np.ndarray:
    x = rho[None, :] * tau
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        terms = np.where(n > 0, n * tau * tau / (np.expm1(x) * -np.expm1(-x)), 0.0)
    return -terms.sum(axis=0)


def _single_exposure_rate(n: np.ndarray, total: np.ndarray, tau: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return -np.log1p(-n / total) / tau


def _solve(n, total, tau, dark_rate):
    """Newton/bisection on ρ for pixels with at least one detection and one unsaturated exposure."""
    n_pix = n.shape[1]
    rho = np.zeros(n_pix)
    iterations = np.zeros(n_pix, dtype=np.int32)
    converged = np.zeros(n_pix, dtype=bool)

    lo = np.full(n_pix, float(dark_rate))
    if dark_rate > 0:
        at_floor = _score(lo, n, total, tau) <= 0
        rho[at_floor] = dark_rate
        converged[at_floor] = True

    # bracket top: ten times the single-exposure rate of the shortest unsaturated exposure
    unsaturated = n < total
    tau_rows = np.broadcast_to(tau, n.shape)
    masked_tau = np.where(unsaturated, tau_rows, np.inf)
    shortest = np.argmin(masked_tau, axis=0)
    cols = np.arange(n_pix)
    tau_short = tau_rows[shortest, cols]
    rate_short = _single_exposure_rate(n[shortest, cols], total[shortest, cols], tau_short)
    hi = np.where(rate_short > 0, BRACKET_EXPANSION * rate_short, 1.0 / tau_short)
    hi = np.maximum(hi, BRACKET_EXPANSION * lo)

    active = ~converged
    for _ in range(MAX_EXPANSIONS):
        grow = active & (_score(hi, n, total, tau) >= 0)
        if not grow.any():
            break
        lo[grow] = hi[grow]
        hi[grow] *= BRACKET_EXPANSION

    rho = np.where(converged, rho, np.clip(rate_short, lo, hi))
    rho = np.where(~converged & ((rho <= lo) | (rho >= hi)), 0.5 * (lo + hi), rho)

    for _ in range(MAX_ITERATIONS):
        idx = np.flatnonzero(~converged)
        if idx.size == 0:
            break
        r = rho[idx]
        sub_n, sub_total = n[:, idx], total[:, idx]
        score = _score(r, sub_n, sub_total, tau)
        lo[idx] = np.where(score > 0, r, lo[idx])
        hi[idx] = np.where(score < 0, r, hi[idx])

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            step = r - score / _curvature(r, sub_n, tau)
        inside = np.isfinite(step) & (step > lo[idx]) & (step < hi[idx])
        new = np.where(inside, step, 0.5 * (lo[idx] + hi[idx]))

        done = (score == 0) | (np.abs(new - r) <= RELATIVE_STEP_TOL * np.abs(new))
        done |= hi[idx] - lo[idx] <= RELATIVE_STEP_TOL * hi[idx]
        rho[idx] = np.where(score == 0, r, new)
        iterations[idx] += 1
        converged[idx] = done

    return rho, iterations, converged


def hdr_fuse(stack: ExposureStack) -> HdrResult:
    height, width = stack.shape
    n = np.stack([e.counts.counts.ravel().astype(np.float64) for e in stack.entries])
    total = np.stack([np.full(height * width, float(e.n_frames)) for e in stack.entries])
    tau = np.array([[e.tau_bin] for e in stack.entries])

    underflow = np.all(n == 0, axis=0)
    saturated = np.all(n == total, axis=0)
    solve = ~(underflow | saturated)

    phi = np.zeros(height * width)
    iterations = np.zeros(height * width, dtype=np.int32)
    nonconverged = np.zeros(height * width, dtype=bool)

    if saturated.any():
        floors = [
            flux_from_detection_probability((e.n_frames - 1) / e.n_frames, stack.sensor_config(e))
            for e in stack.entries
        ]
        phi[saturated] = max(floors)

    if solve.any():
        rho, iters, converged = _solve(n[:, solve], total[:, solve], tau, stack.dark_rate)
        phi[solve] = np.maximum(0.0, (rho - stack.dark_rate) / stack.eta)
        iterations[solve] = iters
        nonconverged[solve] = ~converged
        if (~converged).any():
            logger.warning(f"HDR solver did not converge on {int((~converged).sum())} pixel(s)")

    shape = (height, width)
    result = HdrResult(
        flux=FluxMap(phi.reshape(shape)),
        saturated_mask=saturated.reshape(shape),
        underflow_mask=underflow.reshape(shape),
        nonconverged_mask=nonconverged.reshape(shape),
        iterations=iterations.reshape(shape),
    )
    try:
        dr = dynamic_range_db(result)
    except DomainError as e:
        logger.info(f"Dynamic range not reported: {e}")
        dr = None
    logger.info(f"Fused {len(stack.entries)} exposure(s) over {width}x{height} pixels")
    return replace(result, dynamic_range_db=dr)


def dynamic_range_db(result: HdrResult) -> float:
    """20·log10 of the 99.9th over the 0.1th flux percentile of valid, lit pixels."""
    values = result.flux.flux[result.valid_mask & (result.flux.flux > 0)]
    if values.size < 2:
        raise DomainError(f"dynamic range needs >= 2 valid pixels with flux > 0, got {values.size}")
    high, low = np.percentile(values, DR_PERCENTILES)
    return float(20.0 * np.log10(high / low))


def hdr_log_likelihood(phi: float, stack: ExposureStack, pixel: Tuple[int, int]) -> float:
    y, x = pixel
    return float(
        sum(
            log_likelihood(phi, int(e.counts.counts[y, x]), e.n_frames, stack.sensor_config(e))
            for e in stack.entries
        )
    )
