"""Seeded Monte Carlo simulation of BB84 under photon-number-splitting and intercept-resend attacks.

Polarization is tracked as a (basis, bit) label per pulse; the source only
contributes a photon number. Pulses are processed in fixed-size blocks, and
block ``b`` draws from a Philox stream keyed by ``(seed, b)``. Splitting the
run into shards therefore never changes the result: shards are contiguous
ranges of blocks and their integer counts are summed.

Eavesdropper model
------------------
With Eve present she replaces the lossy fiber by a lossless one and decides
per pulse what reaches Bob:

* ``pns``: a QND measurement yields n. Multi-photon pulses are split, Eve
  keeps one photon (learning the bit once bases are announced) and forwards
  the rest. Single-photon pulses are blocked with probability ``q``.
* ``intercept_resend``: Eve does not look at n. Non-empty pulses are blocked
  with probability ``q``; a fraction of the forwarded ones is measured in a
  random basis and replaced by one photon carrying her result.
* ``pns_plus_intercept``: ``pns``, plus intercept-resend on the forwarded
  single-photon pulses.

If Eve controls Bob's detector efficiency every forwarded pulse clicks;
otherwise k forwarded photons click with probability 1 - (1 - eta_B)**k.
"""
from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass, fields
from typing import Literal, Optional, Union

import numpy as np

from .link_model import (
    ChannelParams,
    DetectorParams,
    ErrorModel,
    LinkBudget,
    detection_prob_signal,
    link_budget,
    transmission,
)
from .photon_statistics import (
    DEFAULT_N_MAX,
    HeraldedPDC,
    PhotonNumberDistribution,
    SourceModel,
    click_probabilities,
    pdc_joint_amplitudes,
    source_distribution,
)

EveMode = Literal["absent", "pns", "intercept_resend", "pns_plus_intercept"]
AUTO_MATCH = "auto_match"
BLOCK_SIZE = 1 << 16

_PNS_MODES = ("pns", "pns_plus_intercept")


@dataclass(frozen=True)
class EveStrategy:
    """Eavesdropper configuration.

    ``single_photon_block_prob`` is a probability or ``"auto_match"``, in
    which case blocking is tuned so Bob sees exactly the honest click rate.
    ``forward_all_remaining=False`` forwards a single photon of each split
    pulse instead of all n - 1.
    """

    mode: EveMode = "absent"
    single_photon_block_prob: Union[float, str] = 0.0
    intercept_fraction: float = 0.0
    forward_all_remaining: bool = True

    def __post_init__(self) -> None:
        if self.mode not in ("absent", "pns", "intercept_resend", "pns_plus_intercept"):
            raise ValueError(f"unknown Eve mode {self.mode!r}")
        q = self.single_photon_block_prob
        if q == AUTO_MATCH:
            if self.mode not in _PNS_MODES:
                raise ValueError("auto_match needs a photon-number-splitting mode")
        elif isinstance(q, str) or not (0 <= q <= 1):
            raise ValueError(f"single_photon_block_prob must lie in [0, 1] or be 'auto_match', got {q!r}")
        if not (0 <= self.intercept_fraction <= 1):
            raise ValueError(f"intercept_fraction must lie in [0, 1], got {self.intercept_fraction!r}")


@dataclass(frozen=True)
class SimConfig:
    n_pulses: int
    seed: int
    source: SourceModel
    channel: ChannelParams
    bob: DetectorParams
    error_model: ErrorModel = ErrorModel()
    eve: EveStrategy = EveStrategy()
    eve_controls_bob_efficiency: bool = True

    def __post_init__(self) -> None:
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise ValueError(f"n_pulses must be a positive integer, got {self.n_pulses!r}")
        if not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class BlockingPlan:
    """Blocking probabilities that make Eve's attack rate-neutral.

    ``status`` is ``"matched"``, ``"infeasible"`` (even forwarding every
    single photon leaves Bob short of clicks) or ``"multi_photon_surplus"``
    (split pulses alone exceed the honest rate, so some of them are dropped
    too, with probability ``multi_block_prob``).
    """

    block_prob: float
    multi_block_prob: float = 0.0
    status: Literal["matched", "infeasible", "multi_photon_surplus"] = "matched"


@dataclass(frozen=True)
class SimCounts:
    emitted: int = 0
    heralded: int = 0
    clicks: int = 0
    sifted_bits: int = 0
    error_bits: int = 0
    signal_sifted_bits: int = 0
    eve_known_bits: int = 0

    def __add__(self, other: "SimCounts") -> "SimCounts":
        return SimCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))


@dataclass(frozen=True)
class SimResult:
    """Outcome of a simulation run.

    ``eve_known_fraction`` counts sifted bits that carry Alice's signal (at
    least one forwarded photon clicked) and whose value Eve knows after the
    basis announcement. Clicks caused by dark counts alone carry no signal
    and are excluded; ``eve_known_fraction_all`` divides by every sifted bit.
    """

    emitted: int
    heralded: int
    clicks: int
    sifted_bits: int
    error_bits: int
    signal_sifted_bits: int
    eve_known_bits: int
    p_exp_empirical: float
    p_exp_stderr: float
    qber: float
    qber_stderr: float
    eve_known_fraction: float
    eve_known_fraction_all: float
    block_prob: float
    multi_block_prob: float

    @classmethod
    def from_counts(cls, c: SimCounts, plan: BlockingPlan) -> "SimResult":
        p = c.clicks / c.heralded if c.heralded else 0.0
        q = c.error_bits / c.sifted_bits if c.sifted_bits else 0.0
        return cls(
            emitted=c.emitted,
            heralded=c.heralded,
            clicks=c.clicks,
            sifted_bits=c.sifted_bits,
            error_bits=c.error_bits,
            signal_sifted_bits=c.signal_sifted_bits,
            eve_known_bits=c.eve_known_bits,
            p_exp_empirical=p,
            p_exp_stderr=math.sqrt(p * (1 - p) / c.heralded) if c.heralded else 0.0,
            qber=q,
            qber_stderr=math.sqrt(q * (1 - q) / c.sifted_bits) if c.sifted_bits else 0.0,
            eve_known_fraction=c.eve_known_bits / c.signal_sifted_bits if c.signal_sifted_bits else 0.0,
            eve_known_fraction_all=c.eve_known_bits / c.sifted_bits if c.sifted_bits else 0.0,
            block_prob=plan.block_prob,
            multi_block_prob=plan.multi_block_prob,
        )


def _detect_prob(k: np.ndarray | int, eta: float, eve_controls: bool):
    k = np.asarray(k)
    if eve_controls:
        return (k > 0).astype(float)
    return -np.expm1(k * np.log1p(-eta)) if eta < 1 else (k > 0).astype(float)


def auto_match_block_probability(
    dist: PhotonNumberDistribution,
    f: float,
    eta: float,
    eve_controls_bob_efficiency: bool = True,
    forward_all_remaining: bool = True,
) -> BlockingPlan:
    """Blocking probability for single-photon pulses that reproduces the honest click rate.

    Solves p1 (1 - q) D(1) + sum_{n>=2} p_n D(fwd(n)) = p_sig(honest) for q,
    with D(k) the chance that k forwarded photons click at Bob.
    """
    honest = detection_prob_signal(dist, f, eta)
    n = np.arange(dist.probs.size)
    forwarded = np.where(n >= 2, n - 1 if forward_all_remaining else 1, 0)
    multi_rate = float(np.dot(dist.probs[2:], _detect_prob(forwarded[2:], eta, eve_controls_bob_efficiency)))
    single_rate = dist.p1 * float(_detect_prob(1, eta, eve_controls_bob_efficiency))
    if multi_rate >= honest:
        s = 1.0 - honest / multi_rate if multi_rate > 0 else 0.0
        return BlockingPlan(1.0, s, "multi_photon_surplus")
    if single_rate <= 0 or multi_rate + single_rate < honest:
        return BlockingPlan(0.0, 0.0, "infeasible")
    q = 1.0 - (honest - multi_rate) / single_rate
    return BlockingPlan(min(1.0, max(0.0, q)), 0.0, "matched")


def theoretical_reference(config: SimConfig) -> LinkBudget:
    """Exact-mode link budget an honest simulation must reproduce."""
    if config.eve.mode != "absent":
        raise ValueError("the analytic reference only covers an honest channel (Eve absent)")
    return link_budget(config.source, config.channel, config.bob, config.error_model, mode="exact")


def blocking_plan(config: SimConfig) -> BlockingPlan:
    eve = config.eve
    if eve.mode == "absent":
        return BlockingPlan(0.0)
    if eve.single_photon_block_prob == AUTO_MATCH:
        return auto_match_block_probability(
            source_distribution(config.source),
            transmission(config.channel),
            config.bob.eta,
            config.eve_controls_bob_efficiency,
            eve.forward_all_remaining,
        )
    return BlockingPlan(float(eve.single_photon_block_prob))


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


class _Sampler:
    """Per-run constants shared by all blocks."""

    def __init__(self, config: SimConfig, plan: BlockingPlan):
        self.config = config
        self.plan = plan
        self.f_eta = transmission(config.channel) * config.bob.eta
        src = config.source
        if isinstance(src, HeraldedPDC):
            amps = pdc_joint_amplitudes(src.chi, DEFAULT_N_MAX).amps
            pair = amps**2
            self.cdf = np.cumsum(pair / pair.sum())
            self.herald = click_probabilities(src.eta_a, src.d_a, DEFAULT_N_MAX)
        else:
            self.cdf = np.cumsum(source_distribution(src).probs)
            self.herald = None
        self.cdf[-1] = 1.0

    def block(self, index: int) -> SimCounts:
        cfg = self.config
        m = min(BLOCK_SIZE, cfg.n_pulses - index * BLOCK_SIZE)
        rng = _block_rng(cfg.seed, index)

        n = np.searchsorted(self.cdf, rng.random(m), side="right")
        if self.herald is not None:
            n = n[rng.random(m) < self.herald[n]]
        k = n.size

        basis_a = rng.integers(0, 2, k)
        bit_a = rng.integers(0, 2, k)
        basis_b = rng.integers(0, 2, k)
        u_block = rng.random(k)
        u_intercept = rng.random(k)
        eve_basis = rng.integers(0, 2, k)
        eve_guess = rng.integers(0, 2, k)
        u_detect = rng.random(k)
        u_misalign = rng.random(k)
        u_dark = rng.random(k)
        bob_guess = rng.integers(0, 2, k)
        dark_bit = rng.integers(0, 2, k)

        eve = cfg.eve
        bob = cfg.bob
        intercepted = np.zeros(k, dtype=bool)
        known = np.zeros(k, dtype=bool)
        if eve.mode == "absent":
            survived = rng.binomial(n, self.f_eta)
            signal_click = survived > 0
        else:
            if eve.mode in _PNS_MODES:
                multi = n >= 2
                split = multi & (u_block >= self.plan.multi_block_prob)
                single_fwd = (n == 1) & (u_block >= self.plan.block_prob)
                forwarded = np.where(split, n - 1 if eve.forward_all_remaining else 1, 0)
                forwarded = np.where(single_fwd, 1, forwarded)
                known |= split
                if eve.mode == "pns_plus_intercept":
                    intercepted = single_fwd & (u_intercept < eve.intercept_fraction)
            else:
                fwd = (n >= 1) & (u_block >= self.plan.block_prob)
                intercepted = fwd & (u_intercept < eve.intercept_fraction)
                forwarded = np.where(intercepted, 1, np.where(fwd, n, 0))
            known |= intercepted & (eve_basis == basis_a)
            p_det = _detect_prob(forwarded, bob.eta, cfg.eve_controls_bob_efficiency)
            signal_click = u_detect < p_det

        # state reaching Bob: Alice's, or Eve's resent one
        eve_bit = np.where(eve_basis == basis_a, bit_a, eve_guess)
        sent_basis = np.where(intercepted, eve_basis, basis_a)
        sent_bit = np.where(intercepted, eve_bit, bit_a)
        sig_bit = np.where(basis_b == sent_basis, sent_bit, bob_guess)
        sig_bit = sig_bit ^ (u_misalign < cfg.error_model.p_e_signal)

        dark = u_dark < bob.dark
        click = signal_click | dark
        bob_bit = np.where(signal_click, sig_bit, dark_bit)
        sifted = click & (basis_a == basis_b)
        signal_sifted = sifted & signal_click
        return SimCounts(
            emitted=m,
            heralded=k,
            clicks=int(click.sum()),
            sifted_bits=int(sifted.sum()),
            error_bits=int((sifted & (bob_bit != bit_a)).sum()),
            signal_sifted_bits=int(signal_sifted.sum()),
            eve_known_bits=int((signal_sifted & known).sum()),
        )

    def run(self, blocks: range) -> SimCounts:
        total = SimCounts()
        for b in blocks:
            total = total + self.block(b)
        return total


def _run_shard(config: SimConfig, plan: BlockingPlan, blocks: range) -> SimCounts:
    return _Sampler(config, plan).run(blocks)


def run_simulation(config: SimConfig, shards: int = 1, executor: Optional[Executor] = None) -> SimResult:
    """Simulate ``config.n_pulses`` time slots and tally clicks, sifted bits and errors.

    The result depends only on ``config``: ``shards`` sets how the blocks are
    partitioned, and ``executor`` (e.g. a process pool) runs the shards.
    """
    if shards < 1:
        raise ValueError(f"shards must be >= 1, got {shards}")
    plan = blocking_plan(config)
    n_blocks = -(-config.n_pulses // BLOCK_SIZE)
    edges = np.linspace(0, n_blocks, min(shards, n_blocks) + 1).round().astype(int)
    parts = [range(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
    if executor is None:
        counts = [_run_shard(config, plan, part) for part in parts]
    else:
        counts = list(executor.map(_run_shard, [config] * len(parts), [plan] * len(parts), parts))
    total = SimCounts()
    for c in counts:
        total = total + c
    return SimResult.from_counts(total, plan)
