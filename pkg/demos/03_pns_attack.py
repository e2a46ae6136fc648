"""Watching a photon-number-splitting attack succeed.

Eve replaces the lossy fiber with a lossless one. She counts photons in each
pulse without disturbing the polarization, keeps one photon from every
multi-photon pulse and forwards the rest. She then blocks just enough
single-photon pulses that Bob's click rate looks exactly like the honest
lossy link. Once the bases are announced she measures her stored photons
and knows every bit Bob received, while the error rate stays at the dark
count floor.

For comparison we also run the honest link and a plain intercept-resend
attack, which betrays itself with a 25 % error rate.
"""
from bb84limits import ChannelParams, DetectorParams, ErrorModel, WeakCoherent, SinglePhoton, link_budget
from bb84limits.pns_simulator import EveStrategy, SimConfig, run_simulation

PULSES = 1_000_000
bob = DetectorParams(0.11, 1e-5)
link = ChannelParams(0.38, 5.0, 0.0)  # zero-length fiber, 5 dB fixed loss
source = WeakCoherent(0.1)

runs = {
    "honest link": SimConfig(PULSES, 1, source, link, bob),
    "PNS + rate matching": SimConfig(
        PULSES, 1, source, link, bob, eve=EveStrategy("pns", single_photon_block_prob="auto_match")
    ),
    "intercept-resend": SimConfig(
        PULSES,
        1,
        SinglePhoton(),
        ChannelParams(0.38, 0.0, 0.0),
        DetectorParams(1.0, 0.0),
        ErrorModel(),
        EveStrategy("intercept_resend", intercept_fraction=1.0),
    ),
}

print(f"{'scenario':22s} {'click rate':>12s} {'QBER':>20s} {'Eve knows':>10s}")
for name, cfg in runs.items():
    r = run_simulation(cfg, shards=4)
    qber = f"{r.qber:.5f} +- {r.qber_stderr:.5f}"
    print(f"{name:22s} {r.p_exp_empirical:12.5f} {qber:>20s} {r.eve_known_fraction:10.4f}")

honest = link_budget(source, link, bob, mode="exact")
print(f"\nexpected honest click rate {honest.p_exp:.5f}, QBER {honest.p_e_sifted:.5f}")
print(
    "Only ~1700 bits survive sifting, hence the wide QBER error bars."
    "\nThe PNS row matches the honest row in both click rate and QBER, yet Eve"
    "\nholds a copy of every signal bit: at mu = 0.1 and this loss the pulses"
    "\ncarry more multi-photon events than Bob is expected to detect."
)
