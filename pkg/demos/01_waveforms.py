"""
Gaussian doublet training pulses
================================

Each band carries a unit-energy Gaussian doublet whose time scale is the
reciprocal of the band's bandwidth.  The delay information a pulse holds is
set by its derivative energy, which grows with the square of the bandwidth.
"""

import numpy as np

from dispersed_tde import PulseSpec, gaussian_doublet
from dispersed_tde.waveform import derivative_energy, effective_bandwidth, energy

fs = 6.4e6
pulses = {b: gaussian_doublet(PulseSpec.doublet(b, fs)) for b in (100e3, 200e3, 400e3)}

for b, s in pulses.items():
    print(f"B = {b / 1e3:5.0f} kHz  samples = {len(s):4d}  E = {energy(s):.6f}  "
          f"beta = {effective_bandwidth(s) / 1e3:7.2f} kHz  E~ = {derivative_energy(s):.4e}")

###############################################################################
# The effective bandwidth is a fixed fraction of B for this pulse family, so
# doubling B quadruples the derivative energy.

ratio = derivative_energy(pulses[400e3]) / derivative_energy(pulses[100e3])
print(f"E~(400 kHz) / E~(100 kHz) = {ratio:.4f}")

###############################################################################
# Plot the three pulses on a common time axis.

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 3))
    for b, s in pulses.items():
        ax.plot(s.times * 1e6, s.samples.real, label=f"{b / 1e3:.0f} kHz")
    ax.set_xlabel("time (us)")
    ax.legend()
    fig.tight_layout()
    fig.savefig("01_waveforms.png", dpi=120)
    print("wrote 01_waveforms.png")
