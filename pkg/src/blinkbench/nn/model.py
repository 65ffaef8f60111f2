"""Model container: forward/backward over a layer stack, the reference
100x100 grayscale architecture, and binary model serialization.

Gradient conventions
--------------------
``backward`` differentiates the binary cross-entropy loss through the
final sigmoid using the fused form d(loss)/d(logit) = p - y, which stays
finite even for saturated predictions.  For a batch of N samples the
returned parameter gradients belong to the *mean* loss over the batch,
while the returned input gradient rows are each sample's gradient of its
*own* loss (this is what attacks consume; it does not depend on batch
composition).  For N == 1 the two conventions coincide.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .layers import Activation, AvgPool2D, Conv2D, Dense, Flatten

_MAGIC = b"RSNM"
_FORMAT_VERSION = 1

_KIND_CODES = {"conv2d": 1, "avgpool2": 2, "flatten": 3, "dense": 4, "activation": 5}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_ACT_CODES = {"relu": 1, "sigmoid": 2, "tanh": 3}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


@dataclass
class Tape:
    """Per-layer contexts captured by a recording forward pass."""

    ctxs: list
    logits: np.ndarray
    predictions: np.ndarray
    batched: bool
    input_shape: tuple


@dataclass
class Model:
    layers: list
    input_shape: tuple  # (H, W, C) or (F,) for dense-only stacks
    seed: int | None = None
    shape_chain: list = field(init=False)

    def __post_init__(self):
        chain = [tuple(self.input_shape)]
        for layer in self.layers:
            chain.append(layer.output_shape(chain[-1]))
        self.shape_chain = chain

    # -- inference ---------------------------------------------------------

    def _as_batch(self, x):
        x = np.ascontiguousarray(x, dtype=np.float64)
        want = self.input_shape
        if x.shape == want:
            return x[None, ...], False
        if x.ndim == len(want) + 1 and x.shape[1:] == want:
            return x, True
        # grayscale images may omit the trailing channel axis
        if len(want) == 3 and want[2] == 1:
            if x.shape == want[:2]:
                return x[None, :, :, None], False
            if x.ndim == 3 and x.shape[1:] == want[:2]:
                return x[..., None], True
        raise ValueError(f"input shape {x.shape} does not match model input {want}")

    def forward(self, x, record_tape=False):
        """Run the stack; returns (prediction, tape).

        ``prediction`` is a scalar for a single input and a (N,) array for
        a batch; ``tape`` is None unless ``record_tape`` is set.
        """
        xb, batched = self._as_batch(x)
        ctxs = []
        out = xb
        pre_head = None
        last = len(self.layers) - 1
        for idx, layer in enumerate(self.layers):
            if record_tape and idx == last:
                pre_head = out
            out, ctx = layer.forward(out)
            if record_tape:
                ctxs.append(ctx)
        preds = out[:, 0]
        tape = None
        if record_tape:
            head = self.layers[last]
            if isinstance(head, Activation) and head.func == "sigmoid":
                logits = pre_head[:, 0]
            else:
                logits = preds
            tape = Tape(ctxs, logits, preds, batched, xb.shape)
        return (preds if batched else float(preds[0])), tape

    def predict_proba(self, x, batch_size=256):
        """Predicted probability of the positive (closed) class."""
        xb, batched = self._as_batch(x)
        outs = []
        for lo in range(0, xb.shape[0], batch_size):
            p, _ = self.forward(xb[lo : lo + batch_size])
            outs.append(np.atleast_1d(p))
        preds = np.concatenate(outs)
        return preds if batched else float(preds[0])

    # -- gradients ---------------------------------------------------------

    def _check_head(self):
        last = self.layers[-1]
        if not (isinstance(last, Activation) and last.func == "sigmoid"):
            raise ValueError("loss gradients require a final sigmoid activation")
        if not isinstance(self.layers[-2], Dense) or self.layers[-2].out_features != 1:
            raise ValueError("loss gradients require a Dense(...->1) layer before the sigmoid")

    def _backprop(self, tape, seed, need_input_grad, need_param_grads):
        if tape is None or not tape.ctxs:
            raise ValueError("backward requires a tape recorded by forward(record_tape=True)")
        n = tape.predictions.shape[0]
        param_grads = [None] * len(self.layers)
        g = seed
        for i in range(len(self.layers) - 2, -1, -1):
            need_gx = i > 0 or need_input_grad
            g, grads = self.layers[i].backward(
                tape.ctxs[i], g, need_gx=need_gx, need_param_grads=need_param_grads
            )
            if grads is not None:
                param_grads[i] = {k: v / n for k, v in grads.items()}
        input_grad = None
        if need_input_grad:
            input_grad = g if tape.batched else g[0]
        return param_grads, input_grad

    def backward(self, tape, labels, need_input_grad=True, need_param_grads=True):
        """Gradients of the BCE loss.  Returns (param_grads, input_grad).

        ``param_grads`` is a list aligned with ``layers`` (None for layers
        without parameters).  See the module docstring for batch semantics.
        """
        self._check_head()
        if tape is None:
            raise ValueError("backward requires a tape recorded by forward(record_tape=True)")
        y = np.atleast_1d(np.asarray(labels, dtype=np.float64))
        if y.shape != tape.predictions.shape:
            raise ValueError(f"labels shape {y.shape} does not match batch {tape.predictions.shape}")
        seed = (tape.predictions - y)[:, None]
        return self._backprop(tape, seed, need_input_grad, need_param_grads)

    def logit_gradients(self, tape):
        """Per-sample gradient of the pre-sigmoid logit w.r.t. the input."""
        self._check_head()
        n = tape.predictions.shape[0]
        seed = np.ones((n, 1))
        _, gx = self._backprop(tape, seed, need_input_grad=True, need_param_grads=False)
        return gx

    # -- parameters --------------------------------------------------------

    def param_count(self):
        return sum(layer.param_count() for layer in self.layers)

    def parameters(self):
        """Flat list of (layer_index, name, array) in declaration order."""
        out = []
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params()):
                out.append((i, name, layer.params()[name]))
        return out

    def copy(self):
        clone = Model([_layer_from_spec(l.spec()) for l in self.layers], self.input_shape, self.seed)
        for src, dst in zip(self.layers, clone.layers):
            for name, arr in src.params().items():
                dst.params()[name][...] = arr
        return clone

    # -- serialization -----------------------------------------------------

    def save(self, path):
        save_model(self, path)

    @classmethod
    def load(cls, path):
        return load_model(path)


def _layer_from_spec(spec):
    kind = spec["kind"]
    if kind == "conv2d":
        return Conv2D(spec["in_channels"], spec["out_channels"], spec["kernel_size"])
    if kind == "avgpool2":
        return AvgPool2D()
    if kind == "flatten":
        return Flatten()
    if kind == "dense":
        return Dense(spec["in_features"], spec["out_features"])
    if kind == "activation":
        return Activation(spec["func"])
    raise ValueError(f"unknown layer kind {kind!r}")


def build_eye_state_cnn(input_height=100, input_width=100, hidden_activation="relu", seed=0):
    """The reference eye-closedness classifier for 100x100 grayscale input.

    Two valid 3x3 convolution + 2x2 average-pooling stages into three
    dense layers (120, 84, 1) with a sigmoid head; 1,026,989 trainable
    parameters.  The layer geometry is only consistent for 100x100 input,
    so any other size is rejected.
    """
    if (input_height, input_width) != (100, 100):
        raise ValueError(
            f"this architecture requires 100x100 input, got {input_height}x{input_width}; "
            "resize images at ingestion instead"
        )
    rng = np.random.default_rng(seed)
    act = hidden_activation
    layers = [
        Conv2D(1, 6, 3, rng=rng),
        Activation(act),
        AvgPool2D(),
        Conv2D(6, 16, 3, rng=rng),
        Activation(act),
        AvgPool2D(),
        Flatten(),
        Dense(23 * 23 * 16, 120, rng=rng),
        Activation(act),
        Dense(120, 84, rng=rng),
        Activation(act),
        Dense(84, 1, rng=rng),
        Activation("sigmoid"),
    ]
    return Model(layers, (100, 100, 1), seed=seed)


def save_model(model, path):
    """Write the binary model format (see README: magic RSNM, version, layer
    table, then little-endian float64 parameter blocks in declaration order)."""
    parts = [_MAGIC, struct.pack("<H", _FORMAT_VERSION)]
    shape3 = model.input_shape if len(model.input_shape) == 3 else (0, 0, model.input_shape[0])
    parts.append(struct.pack("<III", *shape3))
    parts.append(struct.pack("<q", -1 if model.seed is None else int(model.seed)))
    parts.append(struct.pack("<H", len(model.layers)))
    for layer in model.layers:
        spec = layer.spec()
        code = _KIND_CODES[spec["kind"]]
        parts.append(struct.pack("<B", code))
        if spec["kind"] == "conv2d":
            parts.append(
                struct.pack("<III", spec["in_channels"], spec["out_channels"], spec["kernel_size"])
            )
        elif spec["kind"] == "dense":
            parts.append(struct.pack("<II", spec["in_features"], spec["out_features"]))
        elif spec["kind"] == "activation":
            parts.append(struct.pack("<B", _ACT_CODES[spec["func"]]))
    for layer in model.layers:
        for name in sorted(layer.params()):
            arr = layer.params()[name]
            parts.append(arr.astype("<f8", copy=False).tobytes(order="C"))
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_model(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != _MAGIC:
        raise ValueError(f"{path}: not a model file (bad magic {buf[:4]!r})")
    off = 4
    (version,) = struct.unpack_from("<H", buf, off)
    off += 2
    if version != _FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format version {version}")
    h, w, c = struct.unpack_from("<III", buf, off)
    off += 12
    (seed,) = struct.unpack_from("<q", buf, off)
    off += 8
    (n_layers,) = struct.unpack_from("<H", buf, off)
    off += 2
    layers = []
    for _ in range(n_layers):
        (code,) = struct.unpack_from("<B", buf, off)
        off += 1
        kind = _KIND_NAMES.get(code)
        if kind == "conv2d":
            cin, cout, k = struct.unpack_from("<III", buf, off)
            off += 12
            layers.append(Conv2D(cin, cout, k))
        elif kind == "avgpool2":
            layers.append(AvgPool2D())
        elif kind == "flatten":
            layers.append(Flatten())
        elif kind == "dense":
            fin, fout = struct.unpack_from("<II", buf, off)
            off += 8
            layers.append(Dense(fin, fout))
        elif kind == "activation":
            (fcode,) = struct.unpack_from("<B", buf, off)
            off += 1
            layers.append(Activation(_ACT_NAMES[fcode]))
        else:
            raise ValueError(f"{path}: unknown layer code {code}")
    for layer in layers:
        for name in sorted(layer.params()):
            arr = layer.params()[name]
            raw = np.frombuffer(buf, dtype="<f8", count=arr.size, offset=off)
            off += arr.size * 8
            arr[...] = raw.reshape(arr.shape)
    input_shape = (h, w, c) if h else (c,)
    return Model(layers, input_shape, seed=None if seed < 0 else seed)
