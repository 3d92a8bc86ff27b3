# %% [markdown]
# # Mode-level oracle versus the closed form
#
# The oracle propagates creation operators through the optical network,
# including loss modes, and post-selects one photon per output. It should
# agree with the 4x4 closed form for every setting.

# %%
import numpy as np

from polproj.fock import oracle_povm
from polproj.optics import VppbsSettings, compose_projector

rng = np.random.default_rng(0)
worst = 0.0
for _ in range(50):
    s = VppbsSettings(rng.uniform(), rng.uniform(), rng.uniform(-np.pi, np.pi))
    worst = max(worst, np.abs(oracle_povm(s) - compose_projector(s)[2]).max())
print("max deviation over 50 settings:", worst)

# %% [markdown]
# With T_H = T_V = 1 the device projects onto the singlet with certainty.

# %%
eta, psi, op = compose_projector(VppbsSettings(1.0, 1.0))
print("eta =", eta)
print(np.round(psi.amplitudes, 6))
