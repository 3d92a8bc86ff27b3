# %% [markdown]
# # Synthesizing a projector onto an arbitrary two-photon state
#
# Any pure target factors as local unitaries around the tunable projector.
# The recipe below reports the unitaries, the VPPBS transmissions and the
# success probability, then checks the result against the target.

# %%
import numpy as np

from polproj.optics import plate_realization, synthesize_projector
from polproj.states import TwoPhotonState, concurrence_pure, operator_fidelity, random_state

target = random_state(np.random.default_rng(11))
recipe = synthesize_projector(target)
print("target amplitudes:", np.round(target.amplitudes, 4))
print(f"concurrence {concurrence_pure(target):.4f}, gamma {recipe.gamma:.4f}, eta {recipe.eta:.4f}")

# %% [markdown]
# The measurement operator is eta times the target projector.

# %%
op = recipe.measurement_operator()
print("fidelity with |target><target|:", operator_fidelity(op, target.projector()))

# %% [markdown]
# Each local unitary is built from one QWP and one HWP. The leftover phase
# in each arm becomes a change of the VPPBS phase.

# %%
real = plate_realization(recipe)
for arm, p in (("a", real.plates_a), ("b", real.plates_b)):
    print(f"arm {arm}: QWP {np.degrees(p.qwp):7.2f} deg, HWP {np.degrees(p.hwp):7.2f} deg")
print(f"VPPBS delta with plates only: {real.vppbs.delta:.4f} rad")
print("max |difference|:", np.abs(real.measurement_operator() - op).max())

# %% [markdown]
# A product state needs gamma = 1 and a maximally entangled one gamma = 0.

# %%
for label in ("HV", "DR"):
    r = synthesize_projector(TwoPhotonState.from_label(label))
    print(label, "gamma", round(r.gamma, 6), "eta", round(r.eta, 6))
