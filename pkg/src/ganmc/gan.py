"""Fully connected generator/discriminator pair trained adversarially.

All network math is explicit numpy: forward passes, backpropagation,
and Adam updates, so gradients can be verified against finite
differences. Training is deterministic given the config seed.

Checkpoint layout (little-endian): magic ``GMC1``, u32 format version,
then generator and discriminator in that order, each as u32 layer
count followed per layer by u32 rows, u32 cols, u8 activation tag,
rows*cols f64 weights (row-major) and rows f64 biases; then the f64
normalization scale and a trailing u32 CRC32 of all preceding bytes.
Activation tags: 0 relu, 1 sigmoid, 2 tanh, 3 identity.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_MAGIC = b"GMC1"
CHECKPOINT_VERSION = 1

_ACT_TO_TAG = {"relu": 0, "sigmoid": 1, "tanh": 2, "identity": 3}
_TAG_TO_ACT = {v: k for k, v in _ACT_TO_TAG.items()}

# positive floor for sampled prices, as a fraction of the scale
TRACK_FLOOR_FRACTION = 1e-6

_EPS = 1e-12


class GanError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if kind == "tanh":
        return np.tanh(z)
    if kind == "identity":
        return z
    raise GanError(f"unknown activation {kind!r}")


def _activate_grad(kind: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    # derivative of the activation at z; `a` is the already-computed output
    if kind == "relu":
        return (z > 0.0).astype(z.dtype)
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "identity":
        return np.ones_like(z)
    raise GanError(f"unknown activation {kind!r}")


@dataclass
class MlpParams:
    """Dense network parameters; weights[l] has shape (dims[l+1], dims[l])."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise GanError("per-layer lists must have equal length")
        for l, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise GanError(f"layer {l}: weight/bias shapes {w.shape}/{b.shape} inconsistent")
            if act not in _ACT_TO_TAG:
                raise GanError(f"layer {l}: unknown activation {act!r}")
            if l > 0 and w.shape[1] != self.weights[l - 1].shape[0]:
                raise GanError(f"layer {l}: input dim {w.shape[1]} breaks the chain")

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def copy(self) -> "MlpParams":
        return MlpParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activations=list(self.activations),
        )


def init_mlp(dims: list[int], activations: list[str], rng: np.random.Generator) -> MlpParams:
    """He-style initialization scaled for the fan-in of each layer."""
    if len(activations) != len(dims) - 1:
        raise GanError("need one activation per layer")
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        std = np.sqrt(2.0 / fan_in)
        weights.append(rng.standard_normal((fan_out, fan_in)) * std)
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases, activations=list(activations))


def _forward_cached(net: MlpParams, x: np.ndarray):
    """Batch forward pass keeping pre- and post-activation values per layer."""
    a = x
    pre, post = [], []
    for w, b, act in zip(net.weights, net.biases, net.activations):
        z = a @ w.T + b
        a = _activate(act, z)
        pre.append(z)
        post.append(a)
    return a, (x, pre, post)


def forward(net: MlpParams, x) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of rows."""
    xv = np.asarray(x, dtype=float)
    single = xv.ndim == 1
    if single:
        xv = xv[None, :]
    if xv.shape[1] != net.layer_dims[0]:
        raise GanError(f"input dim {xv.shape[1]} != first layer dim {net.layer_dims[0]}")
    out, _ = _forward_cached(net, xv)
    return out[0] if single else out


def _backward_cached(net: MlpParams, cache, upstream: np.ndarray):
    """Gradients of sum(upstream * output) w.r.t. parameters and input."""
    x, pre, post = cache
    grad_w = [None] * len(net.weights)
    grad_b = [None] * len(net.biases)
    delta = upstream
    for l in range(len(net.weights) - 1, -1, -1):
        delta = delta * _activate_grad(net.activations[l], pre[l], post[l])
        a_prev = post[l - 1] if l > 0 else x
        grad_w[l] = delta.T @ a_prev
        grad_b[l] = delta.sum(axis=0)
        delta = delta @ net.weights[l]
    return grad_w, grad_b, delta


@dataclass
class MlpGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    inputs: np.ndarray


def backward(net: MlpParams, x, upstream) -> MlpGrads:
    """Backpropagate an upstream output gradient to every weight and bias."""
    xv = np.asarray(x, dtype=float)
    uv = np.asarray(upstream, dtype=float)
    single = xv.ndim == 1
    if single:
        xv = xv[None, :]
        uv = uv[None, :]
    if xv.shape[1] != net.layer_dims[0]:
        raise GanError(f"input dim {xv.shape[1]} != first layer dim {net.layer_dims[0]}")
    if uv.shape != (xv.shape[0], net.layer_dims[-1]):
        raise GanError(f"upstream shape {uv.shape} inconsistent with output dim")
    _, cache = _forward_cached(net, xv)
    gw, gb, gx = _backward_cached(net, cache, uv)
    return MlpGrads(weights=gw, biases=gb, inputs=gx[0] if single else gx)


class Adam:
    """Per-parameter adaptive steps with bias-corrected moment estimates."""

    def __init__(self, net: MlpParams, lr: float, beta1: float, beta2: float, eps: float):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m_w = [np.zeros_like(w) for w in net.weights]
        self.v_w = [np.zeros_like(w) for w in net.weights]
        self.m_b = [np.zeros_like(b) for b in net.biases]
        self.v_b = [np.zeros_like(b) for b in net.biases]

    def step(self, net: MlpParams, grad_w, grad_b) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for l in range(len(net.weights)):
            for p, g, m, v in (
                (net.weights[l], grad_w[l], self.m_w[l], self.v_w[l]),
                (net.biases[l], grad_b[l], self.m_b[l], self.v_b[l]),
            ):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class GanConfig:
    T: int
    noise_dim: int = 32
    gen_hidden: tuple[int, ...] = (128, 256)
    disc_hidden: tuple[int, ...] = (256, 64)
    epochs: int = 2000
    batch_size: int = 64
    lr_generator: float = 2e-4
    lr_discriminator: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    scale: float = 1.0
    real_label: float = 0.9
    delta_loss: float = 0.05
    eps_std: float = 1e-4
    k_epochs: int = 20
    probe_size: int = 64

    def __post_init__(self):
        positives = {
            "T": self.T,
            "noise_dim": self.noise_dim,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr_generator": self.lr_generator,
            "lr_discriminator": self.lr_discriminator,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "scale": self.scale,
            "delta_loss": self.delta_loss,
            "eps_std": self.eps_std,
            "k_epochs": self.k_epochs,
            "probe_size": self.probe_size,
        }
        for name, value in positives.items():
            if not (value > 0):
                raise GanError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class GanModel:
    generator: MlpParams
    discriminator: MlpParams
    scale: float

    @property
    def noise_dim(self) -> int:
        return self.generator.layer_dims[0]

    @property
    def T(self) -> int:
        return self.generator.layer_dims[-1]


@dataclass
class TrainReport:
    generator_losses: list[float] = field(default_factory=list)
    discriminator_losses: list[float] = field(default_factory=list)
    collapsed: bool = False
    collapse_reason: str | None = None
    epochs_run: int = 0
    d_used: int | None = None


def detect_collapse(
    discriminator_losses,
    generator_losses,
    probe_samples,
    delta_loss: float,
    eps_std: float,
    k_epochs: int,
) -> str | None:
    """Return a reason string when training has collapsed, else None.

    Collapse: the discriminator loss stayed below delta_loss for
    k_epochs consecutive epochs, the per-day spread of the probe batch
    fell below eps_std, or any recorded loss is non-finite.
    """
    d_losses = np.asarray(discriminator_losses, dtype=float)
    g_losses = np.asarray(generator_losses, dtype=float)
    if d_losses.size and not np.isfinite(d_losses).all():
        return "non-finite discriminator loss"
    if g_losses.size and not np.isfinite(g_losses).all():
        return "non-finite generator loss"
    if d_losses.size >= k_epochs and np.all(d_losses[-k_epochs:] < delta_loss):
        return f"discriminator loss below {delta_loss} for {k_epochs} epochs"
    probe = np.asarray(probe_samples, dtype=float)
    if probe.ndim == 2 and probe.shape[0] >= 2:
        spread = float(probe.std(axis=0).mean())
        if spread < eps_std:
            return f"generated sample spread {spread:.3g} below {eps_std}"
    return None


def _bce_upstream(d_out: np.ndarray, target: float, batch: int) -> np.ndarray:
    # d(BCE)/d(sigmoid output); the 1/(d(1-d)) factor cancels against the
    # sigmoid derivative in the last layer, _EPS keeps the ratio finite
    return (d_out - target) / (d_out * (1.0 - d_out) + _EPS) / batch


def train(windows: np.ndarray, cfg: GanConfig) -> tuple[GanModel, TrainReport]:
    """Alternating Adam steps on the adversarial objective.

    Real windows are scaled by 1/cfg.scale before being fed to the
    discriminator; the generator trains on the non-saturating loss and
    the discriminator on label-smoothed binary cross-entropy.
    """
    x = np.asarray(windows, dtype=float)
    if x.ndim != 2 or x.shape[1] != cfg.T:
        raise GanError(f"training windows must be (count, {cfg.T}), got {x.shape}")
    m = x.shape[0]
    if cfg.batch_size > m:
        raise GanError(f"batch_size {cfg.batch_size} exceeds training-set size {m}")

    rng = np.random.default_rng(cfg.seed)
    gen = init_mlp(
        [cfg.noise_dim, *cfg.gen_hidden, cfg.T],
        ["relu"] * len(cfg.gen_hidden) + ["sigmoid"],
        rng,
    )
    disc = init_mlp(
        [cfg.T, *cfg.disc_hidden, 1],
        ["relu"] * len(cfg.disc_hidden) + ["sigmoid"],
        rng,
    )
    opt_g = Adam(gen, cfg.lr_generator, cfg.beta1, cfg.beta2, cfg.adam_eps)
    opt_d = Adam(disc, cfg.lr_discriminator, cfg.beta1, cfg.beta2, cfg.adam_eps)

    x_scaled = x / cfg.scale
    report = TrainReport()

    for epoch in range(cfg.epochs):
        perm = rng.permutation(m)
        d_epoch, g_epoch = [], []
        for start in range(0, m - cfg.batch_size + 1, cfg.batch_size):
            real = x_scaled[perm[start : start + cfg.batch_size]]
            b = real.shape[0]

            # discriminator step
            z = rng.standard_normal((b, cfg.noise_dim))
            fake, _ = _forward_cached(gen, z)
            d_real, cache_r = _forward_cached(disc, real)
            d_fake, cache_f = _forward_cached(disc, fake)
            gw_r, gb_r, _ = _backward_cached(
                disc, cache_r, _bce_upstream(d_real, cfg.real_label, b)
            )
            gw_f, gb_f, _ = _backward_cached(disc, cache_f, _bce_upstream(d_fake, 0.0, b))
            opt_d.step(disc, [a + c for a, c in zip(gw_r, gw_f)], [a + c for a, c in zip(gb_r, gb_f)])

            dr = np.clip(d_real, _EPS, 1.0 - _EPS)
            df = np.clip(d_fake, _EPS, 1.0 - _EPS)
            d_epoch.append(float(-(np.log(dr).mean() + np.log1p(-df).mean())))

            # generator step (non-saturating loss)
            z = rng.standard_normal((b, cfg.noise_dim))
            fake, cache_g = _forward_cached(gen, z)
            d_out, cache_d = _forward_cached(disc, fake)
            upstream = -1.0 / (np.maximum(d_out, _EPS) * b)
            _, _, grad_fake = _backward_cached(disc, cache_d, upstream)
            gw_g, gb_g, _ = _backward_cached(gen, cache_g, grad_fake)
            opt_g.step(gen, gw_g, gb_g)
            g_epoch.append(float(-np.log(np.clip(d_out, _EPS, 1.0)).mean()))

        report.discriminator_losses.append(float(np.mean(d_epoch)))
        report.generator_losses.append(float(np.mean(g_epoch)))
        report.epochs_run = epoch + 1

        probe = forward(gen, rng.standard_normal((cfg.probe_size, cfg.noise_dim)))
        reason = detect_collapse(
            report.discriminator_losses,
            report.generator_losses,
            probe,
            cfg.delta_loss,
            cfg.eps_std,
            cfg.k_epochs,
        )
        if reason is not None:
            report.collapsed = True
            report.collapse_reason = reason
            break

    model = GanModel(generator=gen, discriminator=disc, scale=cfg.scale)
    return model, report


def sample(model: GanModel, n2: int, seed: int) -> np.ndarray:
    """Generate n2 price tracks of length T, floored at a positive level."""
    if n2 < 1:
        raise GanError(f"sample count must be >= 1, got {n2}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n2, model.noise_dim))
    tracks = forward(model.generator, z) * model.scale
    floor = TRACK_FLOOR_FRACTION * model.scale
    return np.maximum(tracks, floor)


def _pack_net(net: MlpParams) -> bytes:
    parts = [struct.pack("<I", len(net.weights))]
    for w, b, act in zip(net.weights, net.biases, net.activations):
        rows, cols = w.shape
        parts.append(struct.pack("<IIB", rows, cols, _ACT_TO_TAG[act]))
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def save_checkpoint(model: GanModel, path) -> None:
    body = (
        CHECKPOINT_MAGIC
        + struct.pack("<I", CHECKPOINT_VERSION)
        + _pack_net(model.generator)
        + _pack_net(model.discriminator)
        + struct.pack("<d", model.scale)
    )
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body)))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise CheckpointError("truncated checkpoint")
        chunk = self.data[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u8(self) -> int:
        return self.take(1)[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def f64_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(float)


def _unpack_net(reader: _Reader) -> MlpParams:
    layer_count = reader.u32()
    weights, biases, activations = [], [], []
    for _ in range(layer_count):
        rows, cols = reader.u32(), reader.u32()
        tag = reader.u8()
        if tag not in _TAG_TO_ACT:
            raise CheckpointError(f"unknown activation tag {tag}")
        weights.append(reader.f64_array(rows * cols).reshape(rows, cols))
        biases.append(reader.f64_array(rows))
        activations.append(_TAG_TO_ACT[tag])
    return MlpParams(weights=weights, biases=biases, activations=activations)


def load_checkpoint(path) -> GanModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError(f"{path}: checksum failure")
    reader = _Reader(body)
    reader.take(4)  # magic
    version = reader.u32()
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: format version {version} unsupported (expected {CHECKPOINT_VERSION})"
        )
    gen = _unpack_net(reader)
    disc = _unpack_net(reader)
    scale = reader.f64()
    if reader.pos != len(body):
        raise CheckpointError(f"{path}: trailing bytes in checkpoint")
    return GanModel(generator=gen, discriminator=disc, scale=scale)
