#!/usr/bin/env python3
"""Eligibility traces and the delay line, step by step.

A single neuron fires at t = 1 and t = 3. We follow the value through a
delay line of d = 3 and into a synaptic trace, and in parallel track the
neural trace of the same spike train.
"""

import numpy as np

from dybm.traces import DelayLine, TraceVector, compute_beta

spikes = [1, 0, 1, 0, 0, 0, 0, 0]
line = DelayLine(n=1, d=3)
alpha = TraceVector(1, decay=0.5)   # fed by spikes leaving the line
gamma = TraceVector(1, decay=0.5)   # fed by the neuron's own spikes

print(" t  x  in-line  arriving  alpha   gamma   beta(mu=0.5)")
for t, x in enumerate(spikes, start=1):
    arriving = line.push([x])
    alpha.update_synaptic(arriving)
    gamma.update_neural([x])
    print(f"{t:2d}  {x}  {line.lags[:, 0].tolist()!s:9}{arriving[0]:6.0f}  "
          f"{alpha.values[0]:6.3f}  {gamma.values[0]:6.3f}  {compute_beta(line, 0.5)[0]:6.2f}")

# the synaptic trace lags the neural one by the conduction delay
print("\nA spike reaches alpha d - 1 = 2 pushes after it enters the line.")

# batched streams share code but not state
batch = DelayLine(n=2, d=4, batch_shape=(3,))
rng = np.random.default_rng(0)
for _ in range(5):
    batch.push(rng.integers(0, 2, size=(3, 2)))
print("batched lags shape:", batch.lags.shape)
