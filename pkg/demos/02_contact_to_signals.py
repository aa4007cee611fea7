"""From a fingertip push to raw sensor counts.

A finger is mounted on the sensor.  We press it sideways, convert the push
into a force/torque at the sensor, bend the elastomer through a compliance
matrix, and read the resulting 24-channel frames.

Run:  python3 demos/02_contact_to_signals.py
"""

import numpy as np

from ledft.geometry import build_layout
from ledft.mechanics import ContactEvent, default_compliance, displacements_from_wrenches, relax_series, wrench_series
from ledft.optics import PDMS, NoiseModel, synthesize_signals

push = ContactEvent(azimuth=np.pi / 2, height=50.0, peak_force=1.5, t_start=1.0, ramp=0.3, hold=3.0)
t = np.arange(0, 5.0, 0.002)
wrench = wrench_series([push], t)

# Horizontal pushes give fx, fy and bending moments tx, ty; fz and tz stay zero.
at_peak = wrench[np.searchsorted(t, 2.5)]
print("wrench on the plateau [fx fy fz tx ty tz]:", np.round(at_peak, 3))

compliance = default_compliance()
disp = displacements_from_wrenches(compliance, wrench)
print("peak translation (mm):", np.round(disp[:, :3].min(axis=0), 3), "peak rotation (rad):", np.round(disp[:, 3:].min(axis=0), 4))

signals = synthesize_signals(build_layout(), disp, PDMS, NoiseModel(), np.random.default_rng(0))
swing = signals.max(axis=0) - signals.min(axis=0)
print("per-channel swing over the push (counts):", swing.tolist())
print("most responsive receivers:", np.argsort(swing)[::-1][:4].tolist())

# With relaxation switched on the plate lags the load, a simple stand-in for hysteresis.
lagged = relax_series(default_compliance(tau_relax=0.15), disp, 0.002)
i = np.searchsorted(t, 1.3)
print(f"y displacement at end of ramp: elastic {disp[i, 1]:.3f} mm, relaxed {lagged[i, 1]:.3f} mm")
