"""Six-layer batch-normalized MLP classifier, trained from scratch in numpy.

Architecture: five blocks of affine -> batch norm -> LeakyReLU -> inverted
dropout, then a final affine layer producing K=2 logits. The loss treats the
softmax output as per-class Bernoulli probabilities (binary cross entropy on
both classes), and the backward pass differentiates exactly through the
batch statistics, which is what grad_check verifies against central finite
differences.

Forward modes:
    train  batch statistics + running-stat updates, dropout active
    eval   running statistics, no dropout (pure function)
    mc     running statistics, dropout active (MC-dropout sampling)

Parameters live in float32 so checkpoints round-trip exactly; the math is
dtype-generic, and grad_check runs everything on a float64 shadow copy.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DataError, TrainingError

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
CLAMP_EPS = 1e-7
N_BLOCKS = 6


@dataclass
class AdamWConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-2


@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 80
    batch_size: int = 256
    hidden_dim: int = 1024
    dropout_p: float = 0.2
    leaky_slope: float = 0.01
    adamw: AdamWConfig = field(default_factory=AdamWConfig)
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if not 0.0 <= self.dropout_p < 1.0:
            raise DataError("dropout_p must be in [0, 1)")
        if self.batch_size < 2:
            raise DataError("batch_size must be >= 2 (batch norm needs it)")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.hidden_dim < 1:
            raise DataError("hidden_dim must be >= 1")


@dataclass
class LayerParams:
    w: np.ndarray                       # (fan_in, fan_out)
    b: np.ndarray                       # (fan_out,)
    gamma: np.ndarray | None = None     # batch-norm gain; None on the last block
    beta: np.ndarray | None = None
    running_mean: np.ndarray | None = None
    running_var: np.ndarray | None = None

    @property
    def has_bn(self) -> bool:
        return self.gamma is not None


@dataclass
class ModelParams:
    layers: list[LayerParams]
    input_dim: int
    hidden_dim: int
    output_dim: int
    leaky_slope: float = 0.01
    dropout_p: float = 0.2

    def astype(self, dtype) -> "ModelParams":
        """Deep copy with all tensors cast to dtype (float64 shadow, etc.)."""
        layers = []
        for L in self.layers:
            layers.append(LayerParams(
                w=L.w.astype(dtype), b=L.b.astype(dtype),
                gamma=None if L.gamma is None else L.gamma.astype(dtype),
                beta=None if L.beta is None else L.beta.astype(dtype),
                running_mean=(None if L.running_mean is None
                              else L.running_mean.astype(dtype)),
                running_var=(None if L.running_var is None
                             else L.running_var.astype(dtype)),
            ))
        return ModelParams(layers, self.input_dim, self.hidden_dim,
                           self.output_dim, self.leaky_slope, self.dropout_p)


def init_params(n: int, hidden: int = 1024, seed: int = 0, *,
                output_dim: int = 2, leaky_slope: float = 0.01,
                dropout_p: float = 0.2) -> ModelParams:
    """Glorot-uniform weights, zero biases, identity batch-norm state."""
    if n < 1:
        raise DataError(f"input dim must be >= 1, got {n}")
    if hidden < 1:
        raise DataError(f"hidden dim must be >= 1, got {hidden}")
    rng = np.random.default_rng(seed)
    dims = [n] + [hidden] * (N_BLOCKS - 1) + [output_dim]
    layers: list[LayerParams] = []
    for i in range(N_BLOCKS):
        fan_in, fan_out = dims[i], dims[i + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(np.float32)
        b = np.zeros(fan_out, dtype=np.float32)
        if i < N_BLOCKS - 1:
            layers.append(LayerParams(
                w=w, b=b,
                gamma=np.ones(fan_out, np.float32),
                beta=np.zeros(fan_out, np.float32),
                running_mean=np.zeros(fan_out, np.float32),
                running_var=np.ones(fan_out, np.float32),
            ))
        else:
            layers.append(LayerParams(w=w, b=b))
    return ModelParams(layers, input_dim=n, hidden_dim=hidden,
                       output_dim=output_dim, leaky_slope=leaky_slope,
                       dropout_p=dropout_p)


@dataclass
class _BlockCache:
    h_in: np.ndarray                    # input to the affine
    xhat: np.ndarray | None             # normalized pre-activation
    istd: np.ndarray | None             # 1/sqrt(var + eps)
    bn: np.ndarray | None               # gamma*xhat + beta (LeakyReLU input)
    mask: np.ndarray | None             # dropout keep mask, or None


@dataclass
class ForwardState:
    mode: str
    logits: np.ndarray
    caches: list[_BlockCache]
    keep_prob: float


_MODES = ("train", "eval", "mc")


def _validate_input(params: ModelParams, batch: np.ndarray) -> np.ndarray:
    x = np.asarray(batch)
    if x.ndim != 2:
        raise DataError(f"batch must be 2-D, got shape {x.shape}")
    if x.shape[1] != params.input_dim:
        raise DataError(
            f"batch dim {x.shape[1]} does not match model input dim "
            f"{params.input_dim}")
    if not np.isfinite(x).all():
        raise DataError("non-finite values in input batch")
    return x


def _forward(params: ModelParams, batch: np.ndarray, mode: str,
             rng: np.random.Generator | None = None,
             masks: Sequence[np.ndarray | None] | None = None,
             update_running: bool = True) -> ForwardState:
    if mode not in _MODES:
        raise DataError(f"unknown forward mode {mode!r}")
    x = _validate_input(params, batch)
    dtype = params.layers[0].w.dtype
    h = x.astype(dtype, copy=False)
    if mode == "train" and h.shape[0] < 2:
        raise DataError("train mode needs batch size >= 2")
    keep = 1.0 - params.dropout_p
    use_dropout = mode in ("train", "mc") and params.dropout_p > 0.0
    if use_dropout and masks is None and rng is None:
        rng = np.random.default_rng(0)
    slope = params.leaky_slope
    caches: list[_BlockCache] = []
    for i, L in enumerate(params.layers):
        z = h @ L.w + L.b
        if not L.has_bn:
            caches.append(_BlockCache(h_in=h, xhat=None, istd=None,
                                      bn=None, mask=None))
            h = z
            continue
        if mode == "train":
            mu = z.mean(axis=0)
            var = z.var(axis=0)          # biased, matches the backward pass
            istd = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (z - mu) * istd
            if update_running:
                L.running_mean[...] = ((1.0 - BN_MOMENTUM) * L.running_mean
                                       + BN_MOMENTUM * mu)
                L.running_var[...] = ((1.0 - BN_MOMENTUM) * L.running_var
                                      + BN_MOMENTUM * var)
        else:
            istd = 1.0 / np.sqrt(L.running_var + BN_EPS)
            xhat = (z - L.running_mean) * istd
        bn = L.gamma * xhat + L.beta
        act = np.where(bn > 0, bn, slope * bn)
        if use_dropout:
            if masks is not None:
                mask = masks[i]
            else:
                mask = (rng.random(act.shape) < keep).astype(dtype)
            out = act * mask / keep
        else:
            mask = None
            out = act
        caches.append(_BlockCache(h_in=h, xhat=xhat, istd=istd, bn=bn, mask=mask))
        h = out
    return ForwardState(mode=mode, logits=h, caches=caches, keep_prob=keep)


def forward(params: ModelParams, batch: np.ndarray, mode: str = "eval",
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Logits for a batch. See module docstring for the three modes."""
    return _forward(params, batch, mode, rng=rng).logits


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; computed in float64."""
    z = np.asarray(z, dtype=np.float64)
    if not np.isfinite(z).all():
        raise DataError("non-finite values in softmax input")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    # dtype-preserving variant used inside the training path
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def bce_loss(y: np.ndarray, yhat: np.ndarray) -> float:
    """Per-class Bernoulli cross entropy, summed over classes, mean over rows.

    Probabilities are clamped to [CLAMP_EPS, 1-CLAMP_EPS] before the logs.
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    yhat = np.atleast_2d(np.asarray(yhat, dtype=np.float64))
    if y.shape != yhat.shape:
        raise DataError(f"shape mismatch: targets {y.shape} vs probs {yhat.shape}")
    p = np.clip(yhat, CLAMP_EPS, 1.0 - CLAMP_EPS)
    per_row = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).sum(axis=1)
    return float(per_row.mean())


@dataclass
class LayerGrads:
    w: np.ndarray
    b: np.ndarray
    gamma: np.ndarray | None = None
    beta: np.ndarray | None = None


def backward(params: ModelParams, state: ForwardState,
             y_onehot: np.ndarray) -> list[LayerGrads]:
    """Exact gradients of the mean batch loss w.r.t. every trainable tensor.

    Requires the state of a paired train-mode forward pass: gradients flow
    through the batch statistics, the LeakyReLU, and the dropout masks that
    the forward pass actually used.
    """
    if state is None:
        raise TrainingError("backward requires the state returned by a "
                            "train-mode forward pass")
    if state.mode != "train":
        raise TrainingError(
            f"backward needs a train-mode state, got {state.mode!r}")
    y = np.asarray(y_onehot, dtype=state.logits.dtype)
    if y.shape != state.logits.shape:
        raise DataError(
            f"target shape {y.shape} does not match logits {state.logits.shape}")
    nb = state.logits.shape[0]
    probs = _softmax_rows(state.logits)
    pc = np.clip(probs, CLAMP_EPS, 1.0 - CLAMP_EPS)
    # d(loss)/d(prob); zero where the clamp is active (clip has zero slope)
    active = (probs > CLAMP_EPS) & (probs < 1.0 - CLAMP_EPS)
    g = (-(y / pc) + (1.0 - y) / (1.0 - pc)) * active
    # softmax Jacobian-vector product, then mean-over-rows scaling
    d = probs * (g - (g * probs).sum(axis=1, keepdims=True))
    d = d / nb

    slope = params.leaky_slope
    keep = state.keep_prob
    grads: list[LayerGrads] = [None] * len(params.layers)  # type: ignore
    for i in range(len(params.layers) - 1, -1, -1):
        L = params.layers[i]
        c = state.caches[i]
        if L.has_bn:
            if c.mask is not None:
                d = d * c.mask / keep
            d = d * np.where(c.bn > 0, 1.0, slope)
            dgamma = (d * c.xhat).sum(axis=0)
            dbeta = d.sum(axis=0)
            dxhat = d * L.gamma
            bsz = d.shape[0]
            # backprop through (z - mean)/sqrt(var + eps) with batch stats
            da = (c.istd / bsz) * (
                bsz * dxhat
                - dxhat.sum(axis=0)
                - c.xhat * (dxhat * c.xhat).sum(axis=0)
            )
            grads[i] = LayerGrads(w=c.h_in.T @ da, b=da.sum(axis=0),
                                  gamma=dgamma, beta=dbeta)
            d = da @ L.w.T
        else:
            grads[i] = LayerGrads(w=c.h_in.T @ d, b=d.sum(axis=0))
            d = d @ L.w.T
    return grads


@dataclass
class AdamWState:
    m: list[dict[str, np.ndarray]]
    v: list[dict[str, np.ndarray]]


_TENSOR_NAMES = ("w", "b", "gamma", "beta")


def init_adamw_state(params: ModelParams) -> AdamWState:
    m, v = [], []
    for L in params.layers:
        mm, vv = {}, {}
        for name in _TENSOR_NAMES:
            t = getattr(L, name)
            if t is not None:
                mm[name] = np.zeros_like(t)
                vv[name] = np.zeros_like(t)
        m.append(mm)
        v.append(vv)
    return AdamWState(m=m, v=v)


def adamw_update(theta: np.ndarray, grad: np.ndarray, m: np.ndarray,
                 v: np.ndarray, t: int, lr: float, beta1: float, beta2: float,
                 eps: float, weight_decay: float) -> None:
    """One in-place AdamW step on a single tensor (decoupled weight decay)."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    theta -= lr * (mhat / (np.sqrt(vhat) + eps) + weight_decay * theta)


def adamw_step(params: ModelParams, grads: Sequence[LayerGrads],
               state: AdamWState, t: int, config: TrainConfig) -> ModelParams:
    """Apply one AdamW step to every trainable tensor. Mutates params."""
    if t < 1:
        raise DataError("step counter t must be >= 1")
    a = config.adamw
    for i, (L, G) in enumerate(zip(params.layers, grads)):
        for name in _TENSOR_NAMES:
            theta = getattr(L, name)
            if theta is None:
                continue
            g = getattr(G, name)
            if g is None or g.shape != theta.shape:
                raise DataError(f"layer {i + 1}: gradient shape mismatch for "
                                f"{name!r}")
            if not np.isfinite(g).all():
                raise TrainingError(
                    f"non-finite gradient in layer {i + 1} tensor {name!r}")
            adamw_update(theta, g.astype(theta.dtype, copy=False),
                         state.m[i][name], state.v[i][name], t,
                         config.learning_rate, a.beta1, a.beta2, a.eps,
                         a.weight_decay)
    return params


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    loss: float
    accuracy: float


def train(x: np.ndarray, y: np.ndarray,
          config: TrainConfig) -> tuple[ModelParams, list[EpochMetrics]]:
    """Train on (features, 0/1 labels). Bitwise deterministic per seed.

    Each epoch reshuffles with the seeded generator; a trailing short batch
    is kept when it still has >= 2 rows, otherwise dropped. Reported loss and
    accuracy are accumulated from the train-mode passes themselves.
    """
    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(y)
    if x.ndim != 2:
        raise DataError("features must be 2-D")
    if y.shape != (x.shape[0],):
        raise DataError(f"labels shape {y.shape} does not match {x.shape[0]} rows")
    counts = [(y == c).sum() for c in (0, 1)]
    if min(counts) == 0:
        raise DataError("single-class data")
    if min(counts) < 2:
        raise DataError("fewer than 2 samples in one class")
    rng = np.random.default_rng(config.seed)
    params = init_params(x.shape[1], config.hidden_dim, seed=config.seed,
                         leaky_slope=config.leaky_slope,
                         dropout_p=config.dropout_p)
    opt = init_adamw_state(params)
    onehot = np.eye(2, dtype=np.float32)[y]
    n = x.shape[0]
    t = 0
    history: list[EpochMetrics] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        loss_sum = 0.0
        correct = 0
        seen = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            if idx.shape[0] < 2:
                continue
            st = _forward(params, x[idx], "train", rng=rng)
            probs = _softmax_rows(st.logits)
            loss = bce_loss(onehot[idx], probs)
            grads = backward(params, st, onehot[idx])
            t += 1
            adamw_step(params, grads, opt, t, config)
            loss_sum += loss * idx.shape[0]
            correct += int((st.logits.argmax(axis=1) == y[idx]).sum())
            seen += idx.shape[0]
        history.append(EpochMetrics(epoch, loss_sum / seen, correct / seen))
    return params, history


@dataclass(frozen=True)
class Prediction:
    probs: np.ndarray                  # (K,) class probabilities
    label: int                         # argmax; ties resolve to class 0 (anti)
    mc_std: np.ndarray | None = None   # (K,) per-class std over MC samples


def predict(params: ModelParams, features: np.ndarray, mc_samples: int = 0,
            seed: int = 0) -> list[Prediction]:
    """Eval-mode predictions; mc_samples > 0 switches to MC-dropout averaging."""
    x = _validate_input(params, np.asarray(features, dtype=np.float32))
    if mc_samples < 0:
        raise DataError("mc_samples must be >= 0")
    if mc_samples == 0:
        probs = softmax(forward(params, x, "eval"))
        stds = [None] * x.shape[0]
    else:
        rng = np.random.default_rng(seed)
        stack = np.stack([
            softmax(forward(params, x, "mc", rng=rng))
            for _ in range(mc_samples)
        ])
        probs = stack.mean(axis=0)
        stds = stack.std(axis=0)
    out = []
    for i in range(x.shape[0]):
        out.append(Prediction(
            probs=probs[i],
            label=int(np.argmax(probs[i])),
            mc_std=None if mc_samples == 0 else stds[i],
        ))
    return out


def predict_labels(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Argmax labels from a single eval pass (ties go to class 0)."""
    x = _validate_input(params, np.asarray(features, dtype=np.float32))
    logits = forward(params, x, "eval")
    return logits.argmax(axis=1)


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    tolerance: float
    passed: bool
    n_checked: int
    worst: str


def grad_check(params: ModelParams, batch: np.ndarray, y_onehot: np.ndarray,
               tolerance: float = 1e-4, step: float = 1e-3,
               seed: int = 0) -> GradCheckReport:
    """Compare analytic gradients to central finite differences.

    Runs on a float64 shadow copy with the dropout masks drawn once and held
    fixed, so the loss surface the differences probe is the one the analytic
    pass differentiated. Error metric per parameter:
    |g_a - g_fd| / max(|g_a|, |g_fd|, 1e-8).
    """
    p64 = params.astype(np.float64)
    x = np.asarray(batch, dtype=np.float64)
    y = np.asarray(y_onehot, dtype=np.float64)
    rng = np.random.default_rng(seed)
    probe = _forward(p64, x, "train", rng=rng, update_running=False)
    masks = [c.mask for c in probe.caches]

    def loss_at(p: ModelParams) -> float:
        st = _forward(p, x, "train", masks=masks, update_running=False)
        return bce_loss(y, _softmax_rows(st.logits))

    st = _forward(p64, x, "train", masks=masks, update_running=False)
    grads = backward(p64, st, y)

    max_err = 0.0
    worst = ""
    n_checked = 0
    for i, (L, G) in enumerate(zip(p64.layers, grads)):
        for name in _TENSOR_NAMES:
            theta = getattr(L, name)
            if theta is None:
                continue
            ga = getattr(G, name)
            it = np.nditer(theta, flags=["multi_index"])
            while not it.finished:
                ix = it.multi_index
                orig = theta[ix]
                theta[ix] = orig + step
                lp = loss_at(p64)
                theta[ix] = orig - step
                lm = loss_at(p64)
                theta[ix] = orig
                gfd = (lp - lm) / (2.0 * step)
                gan = float(ga[ix])
                err = abs(gan - gfd) / max(abs(gan), abs(gfd), 1e-8)
                n_checked += 1
                if err > max_err:
                    max_err = err
                    worst = f"layer {i + 1} {name}{list(ix)}"
                it.iternext()
    return GradCheckReport(max_rel_error=max_err, tolerance=tolerance,
                           passed=max_err < tolerance, n_checked=n_checked,
                           worst=worst)
