"""Decompose a price path into per-scale detail coefficients.

The transform is orthonormal with periodic extension: energy is conserved
exactly and the inverse reproduces the input to round-off.
"""
import numpy as np

from wavefx import DB4, HAAR, SyntheticSpec, decompose, dwt, generate, idwt, increments

series = generate(
    SyntheticSpec("gbm", {"sigma": 0.002, "dt": 1.0, "y0": 1.45}, 4096, seed=3)
)

for fam in (HAAR, DB4):
    approx, details = dwt(series.close, 5, fam)
    energy = np.sum(approx**2) + sum(np.sum(d**2) for d in details)
    err = abs(energy - np.sum(series.close**2)) / np.sum(series.close**2)
    rec = np.max(np.abs(idwt(approx, details, fam) - series.close))
    print(f"{fam.name:5s}: energy identity error {err:.2e}, reconstruction error {rec:.2e}")

# The scale-1 detail series is the state variable of the diffusion model.
coeffs = decompose(series, 3, HAAR)
for cs in coeffs:
    print(f"scale {cs.scale}: {len(cs)} coefficients, std {np.std(cs.values):.5f}")

# Increments pair each coefficient with its next step for moment binning.
pairs = increments(coeffs[0])
print("first pairs (y, dy):")
print(np.round(pairs[:3], 6))
