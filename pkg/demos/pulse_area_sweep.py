"""
Single-pulse excitation versus pulse area
=========================================

Sweeps the area of one resonant Gaussian pulse and reads out the
density matrix, reproducing the headline single-pulse results: the
compressed Rabi period of the bright superposition, the near-complete
ground-state revival around 2.3 pi for a spectrally narrow pulse, and
the equivalence of sweeps with matched duration-splitting products.

Runs in well under a minute and prints plain-text tables; feed the
written CSVs to ``plotkit curves`` for figures.
"""
# %%
import math

import numpy as np

from vbloch import (
    SystemParams, crossing_points, default_area_grid, extract_rabi_period,
    sweep_pulse_area, tau_delta_product,
)

PI = math.pi
params = SystemParams()
areas = default_area_grid()          # 0 .. 2.5 pi in 0.01 pi steps

# %%
"""
Short pulse: 10 fs FWHM.

The pulse spectrum is much wider than the 7 meV splitting, so both
excited states are driven as one effective bright state and the
ground-state population oscillates in the pulse area with a period
compressed below 2 pi by the effective dipole.
"""
short = sweep_pulse_area(areas, 10.0, params)
period = extract_rabi_period(areas, short.pop0)
print(f"10 fs sweep: tau*delta = {tau_delta_product(10.0, params.delta):.3f}")
print(f"ground-state oscillation period = {period / PI:.4f} pi")

# %%
"""
Long pulse: 85 fs FWHM, same splitting.

Now the pulse spectrum resolves the splitting.  The two excited-state
amplitudes accumulate different dynamical phases during the pulse, so
the populations no longer follow a clean two-level Rabi pattern: the
state coherences cross, swap magnitude ordering, and the system returns
close to the ground state near 2.3 pi.
"""
long_sweep = sweep_pulse_area(areas, 85.0, params)
revival = int(np.argmax(long_sweep.pop0[areas >= 1.5 * PI]))
revival += int(np.argmax(areas >= 1.5 * PI))
print(f"85 fs sweep: tau*delta = {tau_delta_product(85.0, params.delta):.3f}")
print(f"best ground-state revival: pop0 = {long_sweep.pop0[revival]:.4f} "
      f"at {areas[revival] / PI:.2f} pi")
for x in crossing_points(areas, long_sweep.coh01, long_sweep.coh02):
    print(f"|rho01| = |rho02| crossing at {x / PI:.3f} pi")

# %%
"""
Matched products: 85 fs at a 0.82 meV splitting versus 10 fs at 7 meV.

The coherent single-pulse response is controlled by the product of
duration and splitting, not by either alone.  The two pulses differ
8.5x in duration, so equal decay rates consume different fractions of
each sweep; switching decay off isolates the product scaling, and the
two population curves then coincide.
"""
no_decay = dict(gamma01=0.0, gamma02=0.0, gamma12=0.0, gamma1=0.0,
                gamma2=0.0)
matched = sweep_pulse_area(areas, 85.0,
                           SystemParams(delta=0.82, **no_decay))
short_nd = sweep_pulse_area(areas, 10.0, SystemParams(**no_decay))
rms = float(np.sqrt(np.mean((matched.pop0 - short_nd.pop0) ** 2)))
print(f"matched products {tau_delta_product(85.0, 0.82):.3f} vs "
      f"{tau_delta_product(10.0, 7.0):.3f}: pop0 RMS difference = {rms:.4f}")

# %%
"""
Write both sweeps as CSV for plotting.
"""
HEADER = ("# units: theta_over_pi=pi, pop*=occupation probability, "
          "coh*=coherence magnitude\n"
          "theta_over_pi,pop0,pop1,pop2,coh01,coh02,coh12")
for name, sweep in (("sweep_10fs.csv", short), ("sweep_85fs.csv", long_sweep)):
    table = np.column_stack([areas / PI, sweep.pop0, sweep.pop1, sweep.pop2,
                             sweep.coh01, sweep.coh02, sweep.coh12])
    np.savetxt(name, table, delimiter=",", header=HEADER, comments="")
    print(f"wrote {name}")
