"""Fiber link budget: transmission, click probabilities and error rates per time slot.

Two composition modes are offered. ``paper_approx`` drops the coincidence
terms between signal and dark clicks (all probabilities are small), which is
what the closed-form security bounds assume. ``exact`` keeps them and is the
analytic twin of the Monte Carlo simulator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .photon_statistics import (
    DEFAULT_N_MAX,
    PhotonNumberDistribution,
    SourceModel,
    source_distribution,
)

Mode = Literal["paper_approx", "exact"]

DARK_ERROR_PROB = 0.5


class UnattainableTransmissionError(ValueError):
    """The requested transmission exceeds what the link offers even at zero length."""

    def __init__(self, f: float, f_zero_length: float):
        self.f = f
        self.f_zero_length = f_zero_length
        super().__init__(
            f"transmission {f:.6g} exceeds the zero-length transmission {f_zero_length:.6g}: "
            "insecure at any distance >= 0"
        )


@dataclass(frozen=True)
class ChannelParams:
    """Fiber absorption ``beta_db_per_km``, fixed loss ``c_db`` and length ``length_km``."""

    beta_db_per_km: float = 0.38
    c_db: float = 5.0
    length_km: float = 0.0

    def __post_init__(self) -> None:
        for name in ("beta_db_per_km", "c_db", "length_km"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class DetectorParams:
    """Threshold detector with efficiency ``eta`` and dark-count probability ``dark`` per slot."""

    eta: float = 0.11
    dark: float = 1e-5

    def __post_init__(self) -> None:
        if not (0 < self.eta <= 1):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta!r}")
        if not (0 <= self.dark < 0.5):
            raise ValueError(f"dark must lie in [0, 0.5), got {self.dark!r}")


@dataclass(frozen=True)
class ErrorModel:
    """Per-signal error probability from misalignment; dark clicks err with probability 1/2."""

    p_e_signal: float = 0.0
    p_e_dark: float = DARK_ERROR_PROB

    def __post_init__(self) -> None:
        if not (0 <= self.p_e_signal <= 0.5):
            raise ValueError(f"p_e_signal must lie in [0, 0.5], got {self.p_e_signal!r}")
        if self.p_e_dark != DARK_ERROR_PROB:
            raise ValueError("dark clicks carry a uniformly random bit; p_e_dark is fixed at 1/2")


@dataclass(frozen=True)
class LinkBudget:
    f: float
    p_sig: float
    p_dark: float
    p_exp: float
    e: float
    p_e_sifted: float


def transmission(channel: ChannelParams) -> float:
    return 10.0 ** (-(channel.beta_db_per_km * channel.length_km + channel.c_db) / 10.0)


def distance_for_transmission(f: float, beta_db_per_km: float, c_db: float) -> float:
    """Fiber length (km) at which the transmission drops to ``f``.

    Raises
    ------
    UnattainableTransmissionError
        If ``f`` is above the zero-length transmission 10**(-c/10).
    """
    if not (0 < f <= 1):
        raise ValueError(f"transmission must lie in (0, 1], got {f!r}")
    if not beta_db_per_km > 0:
        raise ValueError(f"beta_db_per_km must be positive, got {beta_db_per_km!r}")
    f0 = 10.0 ** (-c_db / 10.0)
    loss_db = -10.0 * math.log10(f)
    # absorb log10 round-off at the zero-length boundary
    if loss_db < c_db - 1e-12 * max(1.0, c_db):
        raise UnattainableTransmissionError(f, f0)
    return max(0.0, loss_db - c_db) / beta_db_per_km


def detection_prob_signal(dist: PhotonNumberDistribution, f: float, eta: float) -> float:
    """Probability that at least one photon survives the channel and is detected.

    Each photon independently survives with probability ``f * eta``; the
    detector does not resolve photon number.
    """
    t = f * eta
    if t <= 0:
        return 0.0
    n = np.arange(dist.probs.size)
    # 1 - (1 - t)**n, accurate for small t
    survive = -np.expm1(n * np.log1p(-t)) if t < 1 else (n > 0).astype(float)
    return float(np.dot(dist.probs, survive))


def expected_click_rate(p_sig: float, dark: float, mode: Mode = "paper_approx") -> float:
    if mode == "paper_approx":
        return p_sig + dark
    if mode == "exact":
        return 1.0 - (1.0 - p_sig) * (1.0 - dark)
    raise ValueError(f"unknown mode {mode!r}")


def error_rate(p_sig: float, err: ErrorModel, dark: float, mode: Mode = "paper_approx") -> float:
    """Error probability per time slot.

    In exact mode a slot with both a signal click and a dark click keeps the
    signal bit, so dark clicks only matter when the signal was not detected.
    """
    if mode == "paper_approx":
        return p_sig * err.p_e_signal + err.p_e_dark * dark
    if mode == "exact":
        return p_sig * err.p_e_signal + (1.0 - p_sig) * err.p_e_dark * dark
    raise ValueError(f"unknown mode {mode!r}")


def sifted_error_fraction(e: float, p_exp: float) -> float:
    return e / p_exp if p_exp > 0 else 0.0


def link_budget(
    source: SourceModel,
    channel: ChannelParams,
    det: DetectorParams,
    err: ErrorModel = ErrorModel(),
    mode: Mode = "paper_approx",
    n_max: int = DEFAULT_N_MAX,
) -> LinkBudget:
    f = transmission(channel)
    dist = source_distribution(source, n_max)
    p_sig = detection_prob_signal(dist, f, det.eta)
    p_exp = expected_click_rate(p_sig, det.dark, mode)
    e = error_rate(p_sig, err, det.dark, mode)
    return LinkBudget(
        f=f,
        p_sig=p_sig,
        p_dark=det.dark,
        p_exp=p_exp,
        e=e,
        p_e_sifted=sifted_error_fraction(e, p_exp),
    )
