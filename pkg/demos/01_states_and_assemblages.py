"""
States and assemblages
======================

Build the two-qubit states used throughout, steer them with the two
conjugate measurements, and look at the resulting assemblage: the set of
unnormalized conditional states on the trusted side, one per remote
setting/outcome pair, with a null outcome for no-detection events.
"""

import numpy as np

from steerqrng import assemblage as asm
from steerqrng import simulate as sim
from steerqrng.linalg import fidelity, partial_trace_A, singlet_state

np.set_printoptions(precision=4, suppress=True)

# the singlet and a noisy version of it (visibility V mixes in white noise)
singlet = singlet_state()
werner = sim.werner_state(0.99)
print("singlet overlap of the V=0.99 Werner state:",
      round(fidelity(werner, singlet), 4))

# steering measurements on the untrusted side: conjugate X and Z
measurements = asm.default_measurements()
print("settings:", measurements.settings)

# the ideal assemblage at heralding efficiency 0.543: each member is the
# trusted party's unnormalized conditional state for one remote outcome
assemblage = asm.ideal_assemblage(singlet, measurements, eta=0.543)
for (x, a), member in assemblage.members.items():
    label = "null" if a is None else a
    print(f"\nsigma(a={label} | x={x}), trace {np.trace(member).real:.4f}")
    print(member)

# the null member carries the undetected weight: (1 - eta) times the
# trusted party's reduced state, independent of the setting
rho_b = partial_trace_A(singlet, 2, 2)
print("\n(1 - eta) * rho_B:")
print(0.457 * rho_b)

# whatever the remote setting, the members sum to the same reduced state:
# steering cannot be used to signal
report = asm.validate_assemblage(assemblage)
print("\nvalidation:", "ok" if report.ok else "FAILED")
print("  hermiticity error ", f"{report.hermiticity_error:.2e}")
print("  min eigenvalue    ", f"{report.min_eigenvalue:+.2e}")
print("  normalization err ", f"{report.normalization_error:.2e}")
print("  signaling error   ", f"{report.signaling_error:.2e}")
