"""
RMSE versus number of bands
===========================

Add 100 kHz bands one at a time at noise density 0.1.  Common random
numbers keep the fading of the earlier bands fixed as bands are added,
so the curves show the effect of the extra band alone.
"""

from dispersed_tde import band_study_config, run_band_sweep

report = run_band_sweep(band_study_config(trials=300))

methods = report.config.combiners
print("  K " + " ".join(f"{m:>10}" for m in methods) + "       CRLB")
for p in report.points:
    row = " ".join(f"{p.rmse(m) * 1e9:10.1f}" for m in methods)
    print(f"{p.sweep_value:3g} {row} {p.crlb_rmse * 1e9:10.1f}")
print("(RMSE in ns)")

###############################################################################
# The gain per added band shrinks for optimal combining.

opt = report.series("optimal")
print("optimal gain per band (ns):", " ".join(f"{(a - b) * 1e9:.0f}" for a, b in zip(opt, opt[1:])))
