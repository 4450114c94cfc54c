"""Forward model of a multi-frequency amplitude-modulated ToF pixel.

A pixel measurement is a complex vector with one entry per modulation
frequency.  Every light path of length d contributes its amplitude times
e^{2*pi*i*d/lambda_k} to entry k, so the full measurement is a linear map
of the *backscattering* (amplitude vs. distance profile) through a dense
dictionary of cosine/sine columns.  This module holds the domain types,
the dictionary construction, synthetic backscattering generators and the
sensor noise model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT_CM_S = 29_979_245_800.0

#: Stand-in modulation frequencies (Hz): one short and two long
#: half-wavelengths, giving an unambiguous range well beyond 450 cm.
DEFAULT_FREQUENCIES_HZ = (120e6, 80e6, 16e6)


class MeasurementError(ValueError):
    """Invalid input to the measurement model."""


@dataclass(frozen=True)
class FrequencyConfig:
    """The set of modulation frequencies used by the sensor."""

    frequencies: tuple[float, ...]

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        if len(freqs) < 1:
            raise MeasurementError("need at least one modulation frequency")
        if any(f <= 0 for f in freqs):
            raise MeasurementError("modulation frequencies must be positive")
        if len(set(freqs)) != len(freqs):
            raise MeasurementError("modulation frequencies must be distinct")
        object.__setattr__(self, "frequencies", freqs)

    @property
    def m(self) -> int:
        return len(self.frequencies)

    @property
    def half_wavelengths(self) -> np.ndarray:
        """Half-wavelengths lambda_k = c / (2 f_k), in cm."""
        return SPEED_OF_LIGHT_CM_S / (2.0 * np.asarray(self.frequencies))


def default_frequencies() -> FrequencyConfig:
    return FrequencyConfig(DEFAULT_FREQUENCIES_HZ)


@dataclass(frozen=True)
class DistanceGrid:
    """Uniform discretization of candidate path distances, in cm."""

    d_min: float
    d_max: float
    step: float

    def __post_init__(self):
        if not (self.d_min < self.d_max):
            raise MeasurementError("require d_min < d_max")
        if self.step <= 0:
            raise MeasurementError("require step > 0")

    @property
    def n(self) -> int:
        # small epsilon guards against float dust in (d_max - d_min) / step
        return int(math.floor((self.d_max - self.d_min) / self.step + 1e-9)) + 1

    @property
    def distances(self) -> np.ndarray:
        return self.d_min + self.step * np.arange(self.n)

    def index_of(self, d: float) -> int:
        """Nearest grid index for a distance; exact half-step ties go to the
        smaller index."""
        if d < self.d_min - 1e-9 or d > self.d_max + 1e-9:
            raise MeasurementError(f"distance {d} cm outside grid "
                                   f"[{self.d_min}, {self.d_max}]")
        pos = (d - self.d_min) / self.step
        idx = int(math.ceil(pos - 0.5))
        return min(max(idx, 0), self.n - 1)


def default_grid() -> DistanceGrid:
    return DistanceGrid(20.0, 450.0, 1.0)


@dataclass(frozen=True)
class Backscattering:
    """Nonnegative amplitude per grid distance; the unknown of the recovery."""

    amplitudes: np.ndarray
    grid: DistanceGrid

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=float)
        if amps.shape != (self.grid.n,):
            raise MeasurementError(f"amplitudes shape {amps.shape} does not "
                                   f"match grid size {self.grid.n}")
        if amps.min(initial=0.0) < -1e-9:
            raise MeasurementError("backscattering amplitudes must be >= 0")
        amps = np.maximum(amps, 0.0)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


@dataclass(frozen=True)
class MeasurementVector:
    """Per-pixel sensor reading; stored stacked-real (re parts then im parts)."""

    real_view: np.ndarray

    def __post_init__(self):
        rv = np.asarray(self.real_view, dtype=float)
        if rv.ndim != 1 or rv.size % 2 != 0 or rv.size == 0:
            raise MeasurementError("real_view must be a flat vector of even length")
        rv = rv.copy()
        rv.setflags(write=False)
        object.__setattr__(self, "real_view", rv)

    @classmethod
    def from_complex(cls, values: Sequence[complex]) -> "MeasurementVector":
        vc = np.asarray(values, dtype=complex)
        return cls(np.concatenate([vc.real, vc.imag]))

    @property
    def m(self) -> int:
        return self.real_view.size // 2

    @property
    def complex_view(self) -> np.ndarray:
        return self.real_view[:self.m] + 1j * self.real_view[self.m:]

    def l1(self) -> float:
        return float(np.abs(self.real_view).sum())

    def l2(self) -> float:
        return float(np.linalg.norm(self.real_view))


@dataclass(frozen=True)
class DictionaryMatrix:
    """Stacked cosine/sine matrix mapping backscattering to measurement.

    Row k (k < m) of column j holds cos(2 pi d_j / lambda_k); row k+m holds
    the matching sine.  Every column therefore has squared norm m.
    """

    entries: np.ndarray
    grid: DistanceGrid
    freq: FrequencyConfig

    def __post_init__(self):
        ent = np.asarray(self.entries, dtype=float)
        expect = (2 * self.freq.m, self.grid.n)
        if ent.shape != expect:
            raise MeasurementError(f"entries shape {ent.shape}, expected {expect}")
        ent = ent.copy()
        ent.setflags(write=False)
        object.__setattr__(self, "entries", ent)

    @property
    def m(self) -> int:
        return self.freq.m

    @property
    def n(self) -> int:
        return self.grid.n


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian sensor noise with diagonal covariance.

    `paired` asserts that the real and imaginary channel of each frequency
    share a variance (C_jj == C_{j+m,j+m}), the condition under which the
    canonical transformation leaves the recovery unchanged.
    """

    covariance: np.ndarray
    paired: bool = True

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise MeasurementError("covariance must be square with even size")
        if np.any(cov != np.diag(np.diagonal(cov))):
            raise MeasurementError("covariance must be diagonal")
        diag = np.diagonal(cov)
        if np.any(diag < 0):
            raise MeasurementError("covariance diagonal must be nonnegative")
        m = cov.shape[0] // 2
        if self.paired and np.any(diag[:m] != diag[m:]):
            raise MeasurementError("paired covariance requires C_jj == C_{j+m,j+m}")
        cov = cov.copy()
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def isotropic(cls, sigma: float, m: int) -> "NoiseModel":
        return cls(np.eye(2 * m) * float(sigma) ** 2, paired=True)

    @classmethod
    def from_sigmas(cls, sigmas: Sequence[float]) -> "NoiseModel":
        """Per-frequency standard deviations, shared by re/im channels."""
        s = np.asarray(sigmas, dtype=float)
        return cls(np.diag(np.concatenate([s, s]) ** 2), paired=True)

    @property
    def m(self) -> int:
        return self.covariance.shape[0] // 2

    @property
    def sigmas(self) -> np.ndarray:
        """Per-channel standard deviations (length 2m)."""
        return np.sqrt(np.diagonal(self.covariance))

    @property
    def whiten_diag(self) -> np.ndarray:
        """Diagonal of C^{-1/2} (entrywise on the diagonal).

        Whitening needs strictly positive variances; pass a small noise
        floor instead of zero when modelling a noiseless channel.
        """
        s = self.sigmas
        if np.any(s == 0):
            raise MeasurementError("whitening requires strictly positive variances")
        return 1.0 / s


def build_phi(grid: DistanceGrid, freq: FrequencyConfig) -> DictionaryMatrix:
    """Build the stacked-real dictionary over a distance grid."""
    lam = freq.half_wavelengths
    phase = 2.0 * np.pi * grid.distances[None, :] / lam[:, None]
    entries = np.vstack([np.cos(phase), np.sin(phase)])
    return DictionaryMatrix(entries=entries, grid=grid, freq=freq)


def synthesize(x: Backscattering, phi: DictionaryMatrix) -> MeasurementVector:
    """Noise-free measurement of a backscattering: v = Phi x."""
    if x.grid != phi.grid:
        raise MeasurementError("backscattering grid does not match dictionary grid")
    return MeasurementVector(phi.entries @ x.amplitudes)


def make_two_path(d1: float, d2: float, x1: float, x2: float,
                  grid: DistanceGrid) -> Backscattering:
    """Direct return at d1 plus a single interfering return at d2 > d1."""
    if not (d1 < d2):
        raise MeasurementError("require d1 < d2")
    if x1 <= 0 or x2 <= 0:
        raise MeasurementError("amplitudes must be positive")
    return make_multi_path([(d1, x1), (d2, x2)], grid)


def make_multi_path(spikes: Sequence[tuple[float, float]],
                    grid: DistanceGrid) -> Backscattering:
    """Sparse backscattering; spikes snapping to the same bin accumulate."""
    amps = np.zeros(grid.n)
    for d, a in spikes:
        if a <= 0:
            raise MeasurementError("spike amplitudes must be positive")
        amps[grid.index_of(d)] += a
    return Backscattering(amps, grid)


def make_diffuse(direct: tuple[float, float],
                 lobe: tuple[float, float, float, float],
                 grid: DistanceGrid) -> Backscattering:
    """Direct spike plus a discretized Lambertian-style lobe A c^alpha e^{-beta c}.

    The lobe occupies grid distances c > d1 + delta and is scaled by the grid
    step so its mass approximates the continuous integral.  Points where the
    lobe falls below 1e-6 * A are dropped as negligible.
    """
    d1, x1 = direct
    amp, alpha, beta, delta = lobe
    if amp < 0:
        raise MeasurementError("lobe amplitude must be >= 0")
    if beta <= 0:
        raise MeasurementError("lobe decay beta must be > 0")
    if delta < 0:
        raise MeasurementError("lobe onset delta must be >= 0")
    amps = np.zeros(grid.n)
    amps[grid.index_of(d1)] += x1
    if amp > 0:
        c = grid.distances
        sel = c > d1 + delta
        with np.errstate(over="raise", invalid="raise"):
            try:
                vals = amp * np.power(c[sel], alpha) * np.exp(-beta * c[sel])
            except FloatingPointError as exc:
                raise MeasurementError(f"non-finite lobe values: {exc}") from exc
        if not np.all(np.isfinite(vals)):
            raise MeasurementError("non-finite lobe values")
        vals[vals < 1e-6 * amp] = 0.0
        amps[sel] += vals * grid.step
    return Backscattering(amps, grid)


def add_noise(v: MeasurementVector, noise: NoiseModel,
              seed: int | np.random.Generator) -> MeasurementVector:
    """Add independent zero-mean Gaussian noise per real channel."""
    if v.real_view.size != 2 * noise.m:
        raise MeasurementError("noise model size does not match measurement")
    if not noise.paired:
        warnings.warn("unpaired noise covariance: canonical-transform "
                      "invariance is not guaranteed", stacklevel=2)
    rng = np.random.default_rng(seed)
    eta = rng.normal(0.0, noise.sigmas)
    return MeasurementVector(v.real_view + eta)


def compressibility_profile(x: Backscattering) -> tuple[np.ndarray, float, float]:
    """Sorted amplitude profile with a power-law fit x_(i) ~ R i^(-1/r).

    Returns (descending amplitudes, R, r), fitting by least squares in
    log-log over the nonzero entries.  Degenerate cases: a single nonzero
    gives r = 0 (instant decay), a non-decreasing profile gives r = inf.
    """
    srt = np.sort(x.amplitudes)[::-1]
    nz = srt[srt > 0]
    if nz.size == 0:
        raise MeasurementError("all-zero backscattering has no profile")
    if nz.size == 1:
        return srt, float(nz[0]), 0.0
    i = np.arange(1, nz.size + 1, dtype=float)
    slope, logR = np.polyfit(np.log(i), np.log(nz), 1)
    R = float(np.exp(logR))
    if slope >= -1e-12:
        return srt, R, float("inf")
    return srt, R, float(-1.0 / slope)
