"""Small differentiable softmax classifiers with exact analytic gradients.

Two architectures are supported: a linear softmax classifier and a
one-hidden-layer MLP (tanh or relu).  Parameters live in a single flat
float64 vector so that optimizers, checkpoints, and gradient checks all
operate on one object.  Every loss used anywhere in the package is
computed here together with its closed-form gradient; there is no
autodiff and no approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

ARCH_KINDS = ("linear", "mlp1")
ACTIVATIONS = ("tanh", "relu")
LOSS_KINDS = ("ce_hard", "ce_soft", "kl_to_target", "neg_ce_hard")

# Checkpoints print floats with 17 significant digits, which round-trips
# IEEE-754 doubles exactly.
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class ArchitectureSpec:
    """Shape of a classifier.

    kind "linear" maps inputs straight to class logits.  kind "mlp1" puts
    one hidden layer of width ``hidden_dim`` with the given activation in
    between.  ``hidden_dim`` must be 0 for linear models and positive for
    mlp1.
    """

    kind: str
    input_dim: int
    num_classes: int
    hidden_dim: int = 0
    activation: str = "tanh"

    def __post_init__(self):
        if self.kind not in ARCH_KINDS:
            raise ValueError(f"unknown architecture kind {self.kind!r}")
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.kind == "linear":
            if self.hidden_dim != 0:
                raise ValueError("linear model takes hidden_dim == 0")
        else:
            if self.hidden_dim < 1:
                raise ValueError("mlp1 needs hidden_dim >= 1")
            if self.activation not in ACTIVATIONS:
                raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def num_params(self) -> int:
        d, k, h = self.input_dim, self.num_classes, self.hidden_dim
        if self.kind == "linear":
            return k * d + k
        return h * d + h + k * h + k


@dataclass(frozen=True, eq=False)
class Model:
    """An architecture plus one flat float64 parameter vector.

    ``theta`` is treated as immutable: every update returns a new Model.
    Layout is row-major per layer, weights before biases.  For linear:
    W (K x d) then b (K).  For mlp1: W1 (h x d), b1 (h), W2 (K x h),
    b2 (K).  ``init_seed`` records which stream initialized the original
    parameters; it travels through updates and checkpoints unchanged.
    """

    arch: ArchitectureSpec
    theta: np.ndarray
    init_seed: int = 0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1 or theta.shape[0] != self.arch.num_params:
            raise ValueError(
                f"theta has {theta.size} entries, architecture needs "
                f"{self.arch.num_params}"
            )
        object.__setattr__(self, "theta", theta)

    def with_theta(self, theta: np.ndarray) -> "Model":
        return Model(self.arch, theta, self.init_seed)


def unpack_params(model: Model):
    """Return per-layer (W, b) views into the flat parameter vector."""
    arch, theta = model.arch, model.theta
    d, k, h = arch.input_dim, arch.num_classes, arch.hidden_dim
    if arch.kind == "linear":
        w = theta[: k * d].reshape(k, d)
        b = theta[k * d :]
        return [(w, b)]
    o1 = h * d
    o2 = o1 + h
    o3 = o2 + k * h
    w1 = theta[:o1].reshape(h, d)
    b1 = theta[o1:o2]
    w2 = theta[o2:o3].reshape(k, h)
    b2 = theta[o3:]
    return [(w1, b1), (w2, b2)]


def init_model(arch: ArchitectureSpec, seed: int) -> Model:
    """Glorot-uniform weights, zero biases, from a fresh seeded stream.

    Each weight matrix of shape (fan_out, fan_in) is drawn uniformly from
    [-a, a] with a = sqrt(6 / (fan_in + fan_out)).  Matrices are drawn in
    layout order so the stream consumption is fixed.
    """
    rng = np.random.default_rng(seed)
    theta = np.zeros(arch.num_params, dtype=np.float64)
    model = Model(arch, theta, init_seed=seed)
    for w, _b in unpack_params(model):
        fan_out, fan_in = w.shape
        a = np.sqrt(6.0 / (fan_in + fan_out))
        w[...] = rng.uniform(-a, a, size=w.shape)
    return model


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activate_grad(z: np.ndarray, a: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return 1.0 - a * a
    # relu subgradient at 0 is taken as 0
    return (z > 0.0).astype(np.float64)


def _check_inputs(model: Model, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("inputs must be a 2-d array (batch, input_dim)")
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[1] != model.arch.input_dim:
        raise ValueError(
            f"inputs have {x.shape[1]} features, model expects "
            f"{model.arch.input_dim}"
        )
    return x


def _forward_cached(model: Model, x: np.ndarray):
    """Logits plus the intermediates needed for the backward pass."""
    layers = unpack_params(model)
    if model.arch.kind == "linear":
        w, b = layers[0]
        return x @ w.T + b, None, None
    (w1, b1), (w2, b2) = layers
    z1 = x @ w1.T + b1
    a1 = _activate(z1, model.arch.activation)
    return a1 @ w2.T + b2, z1, a1


def forward_logits(model: Model, x: np.ndarray) -> np.ndarray:
    """Class logits, shape (batch, num_classes)."""
    x = _check_inputs(model, x)
    logits, _, _ = _forward_cached(model, x)
    return logits


def forward_log_probs(model: Model, x: np.ndarray) -> np.ndarray:
    """Row-wise log softmax of the logits."""
    logits = forward_logits(model, x)
    return logits - logsumexp(logits, axis=1, keepdims=True)


def forward_probs(model: Model, x: np.ndarray) -> np.ndarray:
    """Row-wise softmax probabilities.

    The row maximum is subtracted before exponentiation so no overflow
    can occur; every row sums to 1 up to rounding.
    """
    logits = forward_logits(model, x)
    return _softmax(logits)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def kl_divergence(q: np.ndarray, p: np.ndarray) -> float:
    """KL(q || p) in nats between two distributions over classes.

    Terms with q_k = 0 contribute zero.  Any p_k <= 0 where q_k > 0 is a
    domain error.  The result is clamped at zero so rounding noise never
    produces a negative divergence.
    """
    q = np.asarray(q, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if q.shape != p.shape or q.ndim != 1:
        raise ValueError("q and p must be 1-d arrays of equal length")
    support = q > 0.0
    if np.any(p[support] <= 0.0):
        raise ValueError("p has zero mass where q is positive")
    val = float(np.sum(q[support] * np.log(q[support] / p[support])))
    return max(val, 0.0)


@dataclass(frozen=True)
class LossSpec:
    """Which loss to differentiate.

    kind:
      ce_hard       mean cross-entropy against integer labels
      ce_soft       mean cross-entropy against a fixed soft target
      kl_to_target  mean KL(soft_target || model); same gradient as
                    ce_soft, the loss differs by the target entropy
      neg_ce_hard   ce_hard with loss and gradient negated (ascent)

    soft_target is the distribution used by ce_soft / kl_to_target and is
    shared by every row of the batch.  l1_weight > 0 adds
    l1_weight * sum(|theta|) with subgradient sign(theta), sign(0) = 0.
    """

    kind: str = "ce_hard"
    soft_target: np.ndarray | None = None
    l1_weight: float = 0.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.l1_weight < 0.0:
            raise ValueError("l1_weight must be >= 0")
        if self.kind in ("ce_soft", "kl_to_target"):
            if self.soft_target is None:
                raise ValueError(f"{self.kind} needs a soft_target")
            t = np.asarray(self.soft_target, dtype=np.float64)
            if t.ndim != 1 or np.any(t < 0.0):
                raise ValueError("soft_target must be a 1-d distribution")
            if abs(float(t.sum()) - 1.0) > 1e-8:
                raise ValueError("soft_target must sum to 1")
            object.__setattr__(self, "soft_target", t)


def _check_labels(y, num_classes: int, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError("labels must be 1-d and match the batch size")
    y = y.astype(np.int64)
    if np.any(y < 1) or np.any(y > num_classes):
        raise ValueError(f"labels must lie in [1, {num_classes}]")
    return y


def loss_and_grad(model: Model, x: np.ndarray, y, spec: LossSpec):
    """Loss value and exact gradient d loss / d theta.

    Parameters
    ----------
    model : Model
    x : array (batch, input_dim)
    y : integer labels in [1, num_classes] for the hard-label losses,
        ignored (may be None) for ce_soft / kl_to_target
    spec : LossSpec

    Returns
    -------
    (float, np.ndarray) with the gradient flat in theta layout.
    """
    x = _check_inputs(model, x)
    n, k = x.shape[0], model.arch.num_classes
    logits, z1, a1 = _forward_cached(model, x)
    log_p = logits - logsumexp(logits, axis=1, keepdims=True)
    probs = np.exp(log_p)

    if spec.kind in ("ce_hard", "neg_ce_hard"):
        y0 = _check_labels(y, k, n) - 1
        loss = -float(np.mean(log_p[np.arange(n), y0]))
        target = np.zeros((n, k))
        target[np.arange(n), y0] = 1.0
    else:
        q = spec.soft_target
        if q.shape[0] != k:
            raise ValueError("soft_target length must equal num_classes")
        loss = -float(np.mean(log_p @ q))
        if spec.kind == "kl_to_target":
            # KL(q||p) = CE(q,p) - H(q); the entropy term is constant in
            # theta so the gradient is identical to ce_soft.
            pos = q > 0.0
            loss += float(np.sum(q[pos] * np.log(q[pos])))
        target = np.broadcast_to(q, (n, k))

    dz = (probs - target) / n
    if spec.kind == "neg_ce_hard":
        loss = -loss
        dz = -dz

    grad = np.empty_like(model.theta)
    arch = model.arch
    d, h = arch.input_dim, arch.hidden_dim
    if arch.kind == "linear":
        grad[: k * d] = (dz.T @ x).ravel()
        grad[k * d :] = dz.sum(axis=0)
    else:
        (w1, _), (w2, _) = unpack_params(model)
        da1 = dz @ w2
        dz1 = da1 * _activate_grad(z1, a1, arch.activation)
        o1 = h * d
        o2 = o1 + h
        o3 = o2 + k * h
        grad[:o1] = (dz1.T @ x).ravel()
        grad[o1:o2] = dz1.sum(axis=0)
        grad[o2:o3] = (dz.T @ a1).ravel()
        grad[o3:] = dz.sum(axis=0)

    if spec.l1_weight > 0.0:
        loss += spec.l1_weight * float(np.sum(np.abs(model.theta)))
        grad += spec.l1_weight * np.sign(model.theta)
    return loss, grad


@dataclass(frozen=True, eq=False)
class OptState:
    """SGD with classical momentum.

    Update rule: v' = momentum * v + g, theta' = theta - lr * v'.
    """

    lr: float
    momentum: float
    velocity: np.ndarray

    def __post_init__(self):
        if not (self.lr > 0.0):
            raise ValueError("lr must be > 0")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")


def init_opt_state(model: Model, lr: float, momentum: float = 0.0) -> OptState:
    return OptState(lr, momentum, np.zeros_like(model.theta))


def sgd_step(model: Model, grad: np.ndarray, opt: OptState):
    """One momentum-SGD update.  Returns (new model, new opt state)."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != model.theta.shape:
        raise ValueError("gradient length does not match theta")
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient contains non-finite entries")
    velocity = opt.momentum * opt.velocity + grad
    theta = model.theta - opt.lr * velocity
    return model.with_theta(theta), OptState(opt.lr, opt.momentum, velocity)


@dataclass(frozen=True)
class TrainConfig:
    """Settings for a seeded minibatch SGD pass over an index set."""

    epochs: int
    batch_size: int
    lr: float
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (self.lr > 0.0):
            raise ValueError("lr must be > 0")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")


def train(model: Model, data, indices, cfg: TrainConfig,
          loss: LossSpec | None = None) -> Model:
    """Minibatch SGD over the given rows of ``data``.

    Each epoch draws one seeded permutation of ``indices`` and walks it
    in consecutive batches of ``batch_size`` (last batch may be short).
    The default loss is hard-label cross-entropy; other LossSpec kinds
    reuse the identical schedule, which the unlearning methods rely on.
    epochs == 0 returns the model unchanged.  Identical arguments always
    produce an identical parameter vector.
    """
    if loss is None:
        loss = LossSpec("ce_hard")
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise ValueError("cannot train on an empty index set")
    if cfg.epochs == 0:
        return model
    rng = np.random.default_rng(cfg.seed)
    opt = init_opt_state(model, cfg.lr, cfg.momentum)
    for _ in range(cfg.epochs):
        order = rng.permutation(indices.size)
        shuffled = indices[order]
        for start in range(0, shuffled.size, cfg.batch_size):
            batch = shuffled[start : start + cfg.batch_size]
            xb = data.features[batch]
            yb = data.labels[batch]
            _, grad = loss_and_grad(model, xb, yb, loss)
            model, opt = sgd_step(model, grad, opt)
    return model


def save_checkpoint(model: Model, path) -> None:
    """Write a model as plain text: header lines, then one value per line.

    Floats are printed with 17 significant digits so a load after save
    reproduces theta bit for bit.
    """
    lines = [
        "unlearnlab-checkpoint v1",
        f"kind={model.arch.kind}",
        f"input_dim={model.arch.input_dim}",
        f"num_classes={model.arch.num_classes}",
        f"hidden_dim={model.arch.hidden_dim}",
        f"activation={model.arch.activation}",
        f"init_seed={model.init_seed}",
        f"num_params={model.theta.size}",
    ]
    lines.extend(FLOAT_FMT % v for v in model.theta)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> Model:
    """Inverse of save_checkpoint."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "unlearnlab-checkpoint v1":
        raise ValueError(f"{path}: not an unlearnlab checkpoint")
    fields = {}
    for ln in lines[1:8]:
        key, _, val = ln.partition("=")
        fields[key] = val
    try:
        arch = ArchitectureSpec(
            kind=fields["kind"],
            input_dim=int(fields["input_dim"]),
            num_classes=int(fields["num_classes"]),
            hidden_dim=int(fields["hidden_dim"]),
            activation=fields["activation"],
        )
        init_seed = int(fields["init_seed"])
        count = int(fields["num_params"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed checkpoint header") from exc
    values = lines[8:]
    if len(values) != count or count != arch.num_params:
        raise ValueError(f"{path}: parameter count mismatch")
    theta = np.array([float(v) for v in values], dtype=np.float64)
    return Model(arch, theta, init_seed=init_seed)
