"""Photon-number statistics of practical QKD sources.

Every source is reduced to a diagonal photon-number distribution p_n per
pulse. Phase coherences between Fock states are dropped on purpose: once the
source is dephased, a QND photon-number measurement leaves the state intact,
so a Fock-diagonal mixture is all the security analysis needs. Polarization is
carried separately as a classical (basis, bit) label.

Three source families are supported:

* ``SinglePhoton``   -- p_1 = 1.
* ``WeakCoherent``   -- Poisson statistics with mean photon number mu.
* ``HeraldedPDC``    -- the signal arm of a two-mode squeezed vacuum,
  conditioned on a click of a threshold detector (efficiency eta_a, dark
  count probability d_a) monitoring the idler arm.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from scipy import stats

DEFAULT_N_MAX = 20
TAIL_TOLERANCE = 1e-9

PdcMode = Literal["exact", "paper_taylor"]


class TruncationWarning(UserWarning):
    """Raised when more than ``TAIL_TOLERANCE`` of the mass is folded into the last bin."""


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Truncated photon-number distribution, ``probs[n]`` for n = 0..n_max."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("probs must be a 1-d vector with at least two entries")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        total = p.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def p0(self) -> float:
        return float(self.probs[0])

    @property
    def p1(self) -> float:
        return float(self.probs[1])

    @property
    def p_multi(self) -> float:
        return multi_photon_probability(self)

    def mean(self) -> float:
        return float(np.dot(np.arange(self.probs.size), self.probs))

    @classmethod
    def single_photon(cls, n_max: int = DEFAULT_N_MAX) -> "PhotonNumberDistribution":
        p = np.zeros(n_max + 1)
        p[1] = 1.0
        return cls(p)


@dataclass(frozen=True)
class SinglePhoton:
    """Ideal single-photon source."""


@dataclass(frozen=True)
class WeakCoherent:
    """Attenuated laser, mean photon number ``mu`` (= alpha**2) per pulse."""

    mu: float

    def __post_init__(self) -> None:
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be positive, got {self.mu!r}")


@dataclass(frozen=True)
class HeraldedPDC:
    """Parametric downconversion source heralded by a threshold detector.

    Attributes
    ----------
    chi_sq : float
        Squared squeezing parameter chi**2, in (0, 1).
    eta_a : float
        Efficiency of Alice's heralding detector, in (0, 1].
    d_a : float
        Dark-count probability of the heralding detector per time slot, in [0, 1).
    """

    chi_sq: float
    eta_a: float
    d_a: float

    def __post_init__(self) -> None:
        if not (0 < self.chi_sq < 1):
            raise ValueError(f"chi_sq must lie in (0, 1), got {self.chi_sq!r}")
        if not (0 < self.eta_a <= 1):
            raise ValueError(f"eta_a must lie in (0, 1], got {self.eta_a!r}")
        if not (0 <= self.d_a < 1):
            raise ValueError(f"d_a must lie in [0, 1), got {self.d_a!r}")

    @property
    def chi(self) -> float:
        return math.sqrt(self.chi_sq)


SourceModel = Union[SinglePhoton, WeakCoherent, HeraldedPDC]


@dataclass(frozen=True)
class PdcAmplitudes:
    """Real amplitudes c_n of the joint state sum_n c_n |n, n>."""

    amps: np.ndarray
    mode: PdcMode


@dataclass(frozen=True)
class HeraldedState:
    """Heralded signal distribution together with the heralding probability."""

    distribution: PhotonNumberDistribution
    heralding_prob: float


def _fold_tail(probs: np.ndarray) -> np.ndarray:
    probs = np.clip(probs, 0.0, None)
    probs[-1] = max(0.0, 1.0 - probs[:-1].sum())
    return probs / probs.sum()


def poisson_distribution(mu: float, n_max: int = DEFAULT_N_MAX) -> PhotonNumberDistribution:
    """Poisson photon-number distribution of a weak coherent pulse.

    Mass above ``n_max`` is folded into the last bin.

    Raises
    ------
    ValueError
        If ``mu`` is not positive, or if the tail beyond ``n_max`` exceeds
        ``TAIL_TOLERANCE`` (the message names the smallest adequate n_max).
    """
    if not (mu > 0 and math.isfinite(mu)):
        raise ValueError(f"mu must be positive, got {mu!r}")
    if n_max < 2:
        raise ValueError(f"n_max must be at least 2, got {n_max}")
    tail = stats.poisson.sf(n_max, mu)
    if tail > TAIL_TOLERANCE:
        required = int(stats.poisson.isf(TAIL_TOLERANCE, mu)) + 1
        while stats.poisson.sf(required, mu) > TAIL_TOLERANCE:
            required += 1
        raise ValueError(
            f"n_max={n_max} leaves {tail:.3g} of the mass at mu={mu}; use n_max >= {required}"
        )
    probs = stats.poisson.pmf(np.arange(n_max + 1), mu)
    return PhotonNumberDistribution(_fold_tail(probs))


def pdc_joint_amplitudes(chi: float, n_max: int = DEFAULT_N_MAX, mode: PdcMode = "exact") -> PdcAmplitudes:
    """Fock amplitudes of the two-mode squeezed vacuum produced by PDC.

    ``exact`` gives c_n = tanh(chi)**n / cosh(chi). ``paper_taylor`` gives the
    fourth-order expansion in chi, padded with zeros up to ``n_max``.
    """
    if not (0 < chi < 1):
        raise ValueError(f"chi must lie in (0, 1), got {chi!r}")
    if n_max < 4:
        raise ValueError(f"n_max must be at least 4, got {n_max}")
    n = np.arange(n_max + 1)
    if mode == "exact":
        amps = np.tanh(chi) ** n / np.cosh(chi)
    elif mode == "paper_taylor":
        x2, x4 = chi**2, chi**4
        amps = np.zeros(n_max + 1)
        amps[:5] = [
            1 - x2 / 2 + 5 * x4 / 24,
            chi - 5 * chi**3 / 6,
            x2 - 7 * x4 / 6,
            chi**3,
            x4,
        ]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    amps.setflags(write=False)
    return PdcAmplitudes(amps, mode)


def click_probabilities(eta: float, dark: float, n_max: int) -> np.ndarray:
    """Diagonal of the threshold-detector click POVM element, n = 0..n_max."""
    n = np.arange(n_max + 1)
    e = -np.expm1(n * np.log1p(-eta)) if eta < 1 else (n > 0).astype(float)
    e[0] = dark
    return e


def heralded_pdc_distribution(
    source: HeraldedPDC, n_max: int = DEFAULT_N_MAX, mode: PdcMode = "exact"
) -> HeraldedState:
    """Signal photon-number distribution conditioned on a herald click.

    In ``exact`` mode the unnormalized weights are c_n**2 times the click
    probability for n idler photons. In ``paper_taylor`` mode only the three
    lowest weights of the fourth-order expansion are kept.
    """
    chi_sq, eta_a, d_a = source.chi_sq, source.eta_a, source.d_a
    if mode == "exact":
        amps = pdc_joint_amplitudes(source.chi, n_max, "exact").amps
        weights = amps**2 * click_probabilities(eta_a, d_a, n_max)
        # geometric tail of c_n**2 beyond n_max, with click probability <= 1
        tail = amps[-1] ** 2 * np.tanh(source.chi) ** 2 / (1 - np.tanh(source.chi) ** 2)
    elif mode == "paper_taylor":
        weights = np.zeros(n_max + 1)
        weights[:3] = [
            d_a * (1 - chi_sq + 2 * chi_sq**2 / 3),
            eta_a * chi_sq * (1 - 5 * chi_sq / 3),
            eta_a * (2 - eta_a) * chi_sq**2,
        ]
        tail = 0.0
    else:
        raise ValueError(f"unknown mode {mode!r}")
    norm = float(weights.sum())
    if norm < 1e-300:
        raise ValueError("heralding probability vanishes; need d_a > 0 or chi > 0")
    if tail / norm > TAIL_TOLERANCE:
        warnings.warn(
            f"truncation at n_max={n_max} drops {tail / norm:.3g} of the heralded mass",
            TruncationWarning,
            stacklevel=2,
        )
    return HeraldedState(PhotonNumberDistribution(weights / norm), norm)


def multi_photon_probability(dist: PhotonNumberDistribution) -> float:
    """Probability of two or more photons, 1 - p0 - p1, clamped to [0, 1]."""
    p = dist.probs
    # summing the tail directly avoids cancellation when p_multi is tiny
    return float(min(1.0, max(0.0, p[2:].sum())))


def source_distribution(
    source: SourceModel, n_max: int = DEFAULT_N_MAX, mode: PdcMode = "exact"
) -> PhotonNumberDistribution:
    """Photon-number distribution emitted per (used) pulse for any source model."""
    if isinstance(source, SinglePhoton):
        return PhotonNumberDistribution.single_photon(n_max)
    if isinstance(source, WeakCoherent):
        return poisson_distribution(source.mu, n_max)
    if isinstance(source, HeraldedPDC):
        return heralded_pdc_distribution(source, n_max, mode).distribution
    raise TypeError(f"unsupported source {source!r}")
