"""Network layers: valid-padding convolution, 2x2 average pooling, flatten,
dense, and pointwise activations.

Layers hold parameters but never cache activations; ``forward`` returns a
context object that ``backward`` consumes.  This keeps layers read-only
during inference so a model can be shared across threads while attacks run.
"""

import numpy as np

from . import kernels

ACTIVATIONS = ("relu", "sigmoid", "tanh")


def stable_sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Base layer. Subclasses with parameters expose .weight/.bias."""

    kind = "?"

    def params(self):
        return {}

    def param_count(self):
        return sum(int(p.size) for p in self.params().values())

    def forward(self, x):
        raise NotImplementedError

    def backward(self, ctx, gy, need_gx=True, need_param_grads=True):
        raise NotImplementedError

    def output_shape(self, in_shape):
        raise NotImplementedError

    def spec(self):
        raise NotImplementedError


class Conv2D(Layer):
    kind = "conv2d"

    def __init__(self, in_channels, out_channels, kernel_size=3, rng=None):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        fan_in = kernel_size * kernel_size * in_channels
        fan_out = kernel_size * kernel_size * out_channels
        shape = (kernel_size, kernel_size, in_channels, out_channels)
        if rng is None:
            self.weight = np.zeros(shape)
        else:
            self.weight = glorot_uniform(rng, shape, fan_in, fan_out)
        self.bias = np.zeros(out_channels)

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, x):
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise ValueError(
                f"conv2d expects (N,H,W,{self.in_channels}), got {x.shape}"
            )
        return kernels.conv2d_forward(x, self.weight, self.bias), x

    def backward(self, ctx, gy, need_gx=True, need_param_grads=True):
        x = ctx
        gx, gw, gb = kernels.conv2d_backward(x, self.weight, gy, need_gx=need_gx)
        grads = {"weight": gw, "bias": gb} if need_param_grads else None
        return gx, grads

    def output_shape(self, in_shape):
        h, w, c = in_shape
        if c != self.in_channels:
            raise ValueError(f"conv2d expects {self.in_channels} channels, got {c}")
        k = self.kernel_size
        if h < k or w < k:
            raise ValueError(f"input {in_shape} smaller than kernel {k}x{k}")
        return (h - k + 1, w - k + 1, self.out_channels)

    def spec(self):
        return {
            "kind": self.kind,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": self.kernel_size,
        }


class AvgPool2D(Layer):
    """Fixed 2x2 window, stride 2, floor division on odd extents."""

    kind = "avgpool2"

    def forward(self, x):
        return kernels.avgpool2_forward(x), x.shape

    def backward(self, ctx, gy, need_gx=True, need_param_grads=True):
        return kernels.avgpool2_backward(ctx, gy), None

    def output_shape(self, in_shape):
        h, w, c = in_shape
        if h < 2 or w < 2:
            raise ValueError(f"cannot pool input of shape {in_shape}")
        return (h // 2, w // 2, c)

    def spec(self):
        return {"kind": self.kind}


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, ctx, gy, need_gx=True, need_param_grads=True):
        return gy.reshape(ctx), None

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def spec(self):
        return {"kind": self.kind}


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_features, out_features, rng=None):
        self.in_features = in_features
        self.out_features = out_features
        if rng is None:
            self.weight = np.zeros((in_features, out_features))
        else:
            self.weight = glorot_uniform(
                rng, (in_features, out_features), in_features, out_features
            )
        self.bias = np.zeros(out_features)

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(f"dense expects (N,{self.in_features}), got {x.shape}")
        return x @ self.weight + self.bias, x

    def backward(self, ctx, gy, need_gx=True, need_param_grads=True):
        x = ctx
        grads = None
        if need_param_grads:
            grads = {"weight": x.T @ gy, "bias": gy.sum(axis=0)}
        gx = gy @ self.weight.T if need_gx else None
        return gx, grads

    def output_shape(self, in_shape):
        if in_shape != (self.in_features,):
            raise ValueError(
                f"dense expects ({self.in_features},), got {in_shape}"
            )
        return (self.out_features,)

    def spec(self):
        return {
            "kind": self.kind,
            "in_features": self.in_features,
            "out_features": self.out_features,
        }


class Activation(Layer):
    kind = "activation"

    def __init__(self, func):
        if func not in ACTIVATIONS:
            raise ValueError(f"unknown activation {func!r}; expected one of {ACTIVATIONS}")
        self.func = func

    def forward(self, x):
        if self.func == "relu":
            return np.maximum(x, 0.0), x
        if self.func == "sigmoid":
            y = stable_sigmoid(x)
            return y, y
        y = np.tanh(x)
        return y, y

    def backward(self, ctx, gy, need_gx=True, need_param_grads=True):
        if self.func == "relu":
            return gy * (ctx > 0), None
        if self.func == "sigmoid":
            return gy * ctx * (1.0 - ctx), None
        return gy * (1.0 - ctx * ctx), None

    def output_shape(self, in_shape):
        return in_shape

    def spec(self):
        return {"kind": self.kind, "func": self.func}
