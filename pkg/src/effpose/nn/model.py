"""The position-error corrector network and its serialized form.

Architecture: three dense layers of 600, 500 and 400 units, each
followed by batch normalization and a sigmoid, then a linear map to
the 3-vector position error (mm). Inputs are the 118-float state
vectors, normalized per feature with statistics frozen from the
training split.
"""

from __future__ import annotations

import json

import numpy as np

from effpose.nn.layers import BatchNorm, Dense, Sigmoid
from effpose.seeding import derived_rng

MODEL_MAGIC = b"RVNN"
MODEL_VERSION = 1

DEFAULT_HIDDEN = (600, 500, 400)


class MLPModel:
    def __init__(self, n_in: int = 118, hidden=DEFAULT_HIDDEN, n_out: int = 3,
                 seed: int = 0):
        rng = derived_rng(seed, "init")
        self.sizes = (n_in, *hidden, n_out)
        self.layers = []
        prev = n_in
        for width in hidden:
            self.layers.append(Dense(prev, width, rng))
            self.layers.append(BatchNorm(width))
            self.layers.append(Sigmoid())
            prev = width
        self.layers.append(Dense(prev, n_out, rng))
        self.feature_mean = np.zeros(n_in)
        self.feature_std = np.ones(n_in)

    # -- passes ------------------------------------------------------------

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        """Raw pass over already-normalized inputs, (n, n_in) -> (n, n_out)."""
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite feature")
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dy: np.ndarray) -> None:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)

    # Inference runs in fixed-shape blocks (last block zero-padded) so a
    # sample's output is bit-identical no matter what batch it rides in:
    # BLAS picks different kernels for different matrix heights.
    PREDICT_BLOCK = 8

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Inference on raw (unnormalized) feature rows.

        Batch-composition independent to the last bit: evaluating a row
        alone or inside any batch yields identical bytes.
        """
        features = np.asarray(features, dtype=float)
        single = features.ndim == 1
        x = np.atleast_2d(features)
        x = (x - self.feature_mean) / self.feature_std
        n = x.shape[0]
        block = self.PREDICT_BLOCK
        outs = []
        for start in range(0, n, block):
            chunk = x[start:start + block]
            if chunk.shape[0] < block:
                chunk = np.vstack(
                    [chunk, np.zeros((block - chunk.shape[0], x.shape[1]))])
            outs.append(self.forward(chunk, train=False))
        out = np.vstack(outs)[:n]
        return out[0] if single else out

    # -- parameter access ----------------------------------------------------

    def param_triples(self):
        return [t for layer in self.layers for t in layer.params()]

    def weight_arrays(self):
        return [w for layer in self.layers if isinstance(layer, Dense)
                for w in layer.weight_arrays()]

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {"feature_mean": self.feature_mean, "feature_std": self.feature_std}
        for i, layer in enumerate(self.layers):
            for name, value, _ in layer.params():
                out[f"layer{i}.{name}"] = value
            if isinstance(layer, BatchNorm):
                for name, value in layer.state_arrays():
                    out[f"layer{i}.{name}"] = value
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        self.feature_mean = state["feature_mean"].copy()
        self.feature_std = state["feature_std"].copy()
        for i, layer in enumerate(self.layers):
            for name, value, _ in layer.params():
                value[...] = state[f"layer{i}.{name}"]
            if isinstance(layer, BatchNorm):
                layer.running_mean[...] = state[f"layer{i}.running_mean"]
                layer.running_var[...] = state[f"layer{i}.running_var"]

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.state_dict().items()}


def save_model(path, model: MLPModel) -> None:
    """Versioned binary with a JSON layout descriptor; round trips bit-exact."""
    state = model.state_dict()
    keys = sorted(state)
    header = {
        "sizes": list(model.sizes),
        "arrays": [[k, list(state[k].shape)] for k in keys],
        "dtype": "float64",
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(np.uint32(MODEL_VERSION).tobytes())
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        for k in keys:
            fh.write(np.ascontiguousarray(state[k], dtype=np.float64).tobytes())


def load_model(path) -> MLPModel:
    with open(path, "rb") as fh:
        if fh.read(4) != MODEL_MAGIC:
            raise ValueError("not a model file")
        version = int(np.frombuffer(fh.read(4), dtype=np.uint32)[0])
        if version != MODEL_VERSION:
            raise ValueError(f"unsupported model version {version}")
        blob_len = int(np.frombuffer(fh.read(4), dtype=np.uint32)[0])
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        sizes = header["sizes"]
        state = {}
        for key, shape in header["arrays"]:
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(fh.read(count * 8), dtype=np.float64)
            state[key] = arr.reshape(shape).copy()
    model = MLPModel(n_in=sizes[0], hidden=tuple(sizes[1:-1]), n_out=sizes[-1])
    model.load_state(state)
    return model
