# %% [markdown]
# # Hardy test with the non-maximally entangled projector
#
# The angles make three joint probabilities vanish, and the fourth is
# largest near gamma = 0.645.

# %%
import numpy as np

from polproj.hardy import hardy_angles, hardy_probabilities, hardy_inequality, quoted_inference, table_i_counts
from polproj.optics import optimal_efficiency

a = hardy_angles(0.645)
print(f"alpha = {np.degrees(a.alpha):.2f} deg, beta = {np.degrees(a.beta):.2f} deg")
for label, p in hardy_probabilities(0.645, optimal_efficiency(0.645)).items():
    print(f"{label:24s} {p:.3e}")

# %%
grid = np.arange(1e-4, 1, 1e-3)
vals = [hardy_probabilities(g)["beta,-beta_perp"] for g in grid]
print("best gamma on a 1e-3 grid:", grid[int(np.argmax(vals))])

# %% [markdown]
# The reference counts violate the inequality by about seven standard
# deviations. The conditional inference predicts far more alpha,-alpha_perp
# events than were seen.

# %%
counts = table_i_counts()
lhs, sigma, k = hardy_inequality(counts)
print(f"lhs = {lhs:.0f} +/- {sigma:.1f} ({k:.1f} sigma)")
inf = quoted_inference(counts)
print(f"expected {inf.expected:.0f}, observed {inf.observed}, {inf.discrepancy_sigmas:.1f} sigma apart")
