"""Adam optimizer with bias correction.

Moment estimates live in the optimizer, keyed by (layer index, parameter
name), and are updated in a fixed declaration order so training runs are
reproducible.  The update follows the standard recurrences

    m <- b1*m + (1-b1)*g          v <- b2*v + (1-b2)*g^2
    p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)

with t incremented once per step() call.
"""

import numpy as np


class Adam:
    def __init__(self, model, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.model = model
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}
        for i, name, arr in model.parameters():
            self.m[(i, name)] = np.zeros_like(arr)
            self.v[(i, name)] = np.zeros_like(arr)

    def step(self, param_grads):
        """Apply one update in place.  ``param_grads`` is the list returned
        by Model.backward (aligned with model.layers)."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for i, name, arr in self.model.parameters():
            grads = param_grads[i]
            if grads is None:
                continue
            g = grads[name]
            if g.shape != arr.shape:
                raise ValueError(
                    f"gradient shape {g.shape} does not match parameter {arr.shape} "
                    f"(layer {i}, {name})"
                )
            m = self.m[(i, name)]
            v = self.v[(i, name)]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            arr -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)
