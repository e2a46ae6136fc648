"""Sensitivity of the secure distance to fixed loss and detector noise.

Everything in the model reduces to one number, the smallest tolerable
transmission F_min. Turning it into kilometers depends on the fiber: each
extra dB of fixed loss (connectors, Bob's optics) costs 1/0.38 = 2.6 km.
This sweep prints, for each source, how the reach shrinks as fixed loss
grows and as the dark count rate rises. The CSV is ready for plotting.
"""
import csv
import sys

import numpy as np

from bb84limits import DetectorParams, HeraldedPDC, SinglePhoton, WeakCoherent, max_secure_distance

SOURCES = {"single": SinglePhoton(), "wcp": WeakCoherent(0.1), "pdc": HeraldedPDC(0.01, 0.11, 1e-5)}

writer = csv.writer(sys.stdout, lineterminator="\n")
writer.writerow(["dark_b", "c_db", *(f"l_max_{k}" for k in SOURCES)])
for dark in (1e-6, 1e-5, 1e-4):
    bob = DetectorParams(0.11, dark)
    for c in np.arange(0.0, 12.1, 3.0):
        row = [f"{dark:.0e}", f"{c:.0f}"]
        for src in SOURCES.values():
            b = max_secure_distance(src, bob, 0.38, c, optimize_intensity=not isinstance(src, SinglePhoton))
            row.append("insecure" if b.l_max is None else f"{b.l_max:.1f}")
        writer.writerow(row)

# The same sweep is available from the command line, e.g.
#   bb84limits sweep --of distance --source wcp --axis c --start 0 --stop 12 --steps 5 --format csv
