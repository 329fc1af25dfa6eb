"""
Landmarks from variance extrema
===============================

Cavity candidates are the variance minima of four diagonal quadrants;
valve candidates are the two largest, well separated maxima.  First on a
constructed map, then on the beating ring.
"""
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tfg import RingPhantomSpec, VarianceMap, detect_landmarks, gen_ring
from tfg.detect import quadrant_labels
from tfg.pipeline import analyze_landmarks

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

# %%
# A constructed map: four dips and two bumps 30 px apart.
n = 96
yy, xx = np.mgrid[0:n, 0:n].astype(float)
c = (n - 1) / 2
values = np.full((n, n), 10.0)
for x, y in [(c - 30, c), (c + 30, c), (c, c - 30), (c, c + 30)]:
    values -= 9 * np.clip(1 - np.hypot(xx - x, yy - y) / 5, 0, None)
for x in (c - 15, c + 15):
    values += 20 * np.exp(-((xx - x) ** 2 + (yy - c) ** 2) / 8)
lms = detect_landmarks(VarianceMap(values, np.ones((n, n), bool)))
for lm in lms:
    print(f"{lm.role:8s} ({lm.x:3d}, {lm.y:3d})  {lm.colour}")

# %%
# On the ring the search region is the myocardium with its cavity filled.
seq, _ = gen_ring(RingPhantomSpec(frames=100, speckle_contrast=0.2))
res = analyze_landmarks(seq)

fig, ax = plt.subplots(1, 2, figsize=(8, 4))
ax[0].imshow(quadrant_labels(np.ones((n, n), bool)), cmap="Pastel1")
ax[0].imshow(values, alpha=0.5)
ax[1].imshow(seq[0], cmap="gray")
for a, s in ((ax[0], lms), (ax[1], res.landmarks)):
    for lm in s:
        a.plot(lm.x, lm.y, "o", color=lm.colour, mec="k")
    a.axis("off")
fig.tight_layout()
fig.savefig(out / "landmarks.png", dpi=100)
