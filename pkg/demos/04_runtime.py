#!/usr/bin/env python3
"""Learning time per 1000 steps as the delay grows.

Every step touches d - 1 lag vectors, so the cost of an update is linear
in d on top of a fixed overhead. Times are per run, amortized over a
batch of 100 runs advanced together.
"""

import numpy as np

from dybm import experiment as ex

ds = np.array([1, 16, 32, 64])
times = []
for d in ds:
    config = ex.ExperimentConfig(d=int(d), steps=1000, runs=100)
    times.append(ex.time_per_run(config) * 1e3)
    print(f"d={d:2d}: {times[-1]:.3f} ms per 1000 steps")

slope, intercept = np.polyfit(ds, times, 1)
print(f"fit: {intercept:.3f} ms + {slope * 1e3:.2f} us * d")
