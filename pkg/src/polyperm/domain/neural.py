from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import expit

from polyperm.domain.dataset import LabeledDataset
from polyperm.domain.errors import DimensionError, NumericError, TrainingError
from polyperm.domain.models import EpochRecord, InputTransform, TrainConfig, TrainHistory
from polyperm.domain.oracle import best_permutation
from polyperm.domain.poly import CoefficientMatrix
from polyperm.utils.logging import get_logger

Params = dict[str, np.ndarray]


class Mode(str, Enum):
    """
    Forward-pass mode.

    :cvar TRAIN: Batch statistics, running statistics are updated.
    :cvar INFER: Running statistics, nothing is updated.
    """

    TRAIN = "train"
    INFER = "infer"


def apply_input_transform(x: np.ndarray, transform: InputTransform) -> np.ndarray:
    if transform == InputTransform.SIGNED_LOG:
        return np.sign(x) * np.log1p(np.abs(x))
    return x


class MLPModel:
    """
    Fully connected permutation ranker.

    Hidden layers compute affine, batch normalization and a rectified-linear activation; the output layer is
    affine followed by a sigmoid. Parameters are stored by name: ``W{i}``, ``b{i}``, ``gamma{i}``,
    ``beta{i}`` for hidden layer i and ``W_out``, ``b_out`` for the output layer.

    :param dims: Layer widths ``[m*h, hidden..., n!]``.
    :param params: Parameter arrays by name.
    :param running_mean: Per hidden layer running mean.
    :param running_var: Per hidden layer running variance.
    :param input_transform: Transform applied to inputs before the first layer.
    :param data_seed: Seed of the data the model was trained on, if known.
    :param bn_momentum: Weight of the previous running statistics.
    :param bn_eps: Batch-normalization epsilon.
    :raises DimensionError: If parameter shapes do not follow ``dims``.
    """

    def __init__(
        self,
        dims: Sequence[int],
        params: Params,
        running_mean: list[np.ndarray],
        running_var: list[np.ndarray],
        input_transform: InputTransform = InputTransform.RAW,
        data_seed: int | None = None,
        bn_momentum: float = 0.9,
        bn_eps: float = 1e-5,
    ) -> None:
        self.dims: tuple[int, ...] = tuple(int(d) for d in dims)
        if len(self.dims) < 2 or any(d < 1 for d in self.dims):
            raise DimensionError(f"Invalid layer widths {self.dims}.")
        self.params: Params = {k: np.array(v, dtype=np.float64, copy=True) for k, v in params.items()}
        self.running_mean: list[np.ndarray] = [np.array(a, dtype=np.float64, copy=True) for a in running_mean]
        self.running_var: list[np.ndarray] = [np.array(a, dtype=np.float64, copy=True) for a in running_var]
        self.input_transform: InputTransform = InputTransform(input_transform)
        self.data_seed: int | None = data_seed
        self.bn_momentum: float = float(bn_momentum)
        self.bn_eps: float = float(bn_eps)
        self._check_shapes()

    @classmethod
    def create(
        cls,
        dims: Sequence[int],
        seed: int = 0,
        input_transform: InputTransform = InputTransform.RAW,
        bn_momentum: float = 0.9,
        bn_eps: float = 1e-5,
    ) -> MLPModel:
        """
        Randomly initialised model: weights drawn with variance ``2 / fan_in``, zero biases, ``gamma = 1``,
        ``beta = 0``, running mean 0 and running variance 1.

        :param dims: Layer widths.
        :param seed: Initialisation seed.
        :param input_transform: Input transform.
        :param bn_momentum: Weight of the previous running statistics.
        :param bn_eps: Batch-normalization epsilon.
        :return: MLPModel.
        """
        rng: np.random.Generator = np.random.default_rng(seed)
        widths: tuple[int, ...] = tuple(int(d) for d in dims)
        params: Params = {}
        running_mean: list[np.ndarray] = []
        running_var: list[np.ndarray] = []
        for i, (fan_in, fan_out) in enumerate(zip(widths[:-2], widths[1:-1])):
            params[f"W{i}"] = rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            params[f"b{i}"] = np.zeros(fan_out)
            params[f"gamma{i}"] = np.ones(fan_out)
            params[f"beta{i}"] = np.zeros(fan_out)
            running_mean.append(np.zeros(fan_out))
            running_var.append(np.ones(fan_out))
        params["W_out"] = rng.normal(0.0, math.sqrt(2.0 / widths[-2]), size=(widths[-2], widths[-1]))
        params["b_out"] = np.zeros(widths[-1])
        return cls(widths, params, running_mean, running_var, input_transform, None, bn_momentum, bn_eps)

    @property
    def hidden_layers(self) -> int:
        return len(self.dims) - 2

    @property
    def input_width(self) -> int:
        return self.dims[0]

    @property
    def output_width(self) -> int:
        return self.dims[-1]

    def parameter_names(self) -> list[str]:
        """
        Parameter names in serialization order.

        :return: Names.
        """
        names: list[str] = []
        for i in range(self.hidden_layers):
            names.extend([f"W{i}", f"b{i}", f"gamma{i}", f"beta{i}"])
        return names + ["W_out", "b_out"]

    def copy(self) -> MLPModel:
        return MLPModel(
            self.dims,
            self.params,
            self.running_mean,
            self.running_var,
            self.input_transform,
            self.data_seed,
            self.bn_momentum,
            self.bn_eps,
        )

    def _check_shapes(self) -> None:
        expected: dict[str, tuple[int, ...]] = {}
        for i, (fan_in, fan_out) in enumerate(zip(self.dims[:-2], self.dims[1:-1])):
            expected[f"W{i}"] = (fan_in, fan_out)
            for name in (f"b{i}", f"gamma{i}", f"beta{i}"):
                expected[name] = (fan_out,)
        expected.update({"W_out": (self.dims[-2], self.dims[-1]), "b_out": (self.dims[-1],)})
        if set(expected) != set(self.params):
            raise DimensionError(f"Parameters {sorted(self.params)} do not match layer widths {self.dims}.")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise DimensionError(f"Parameter {name} has shape {self.params[name].shape}, expected {shape}.")
        if len(self.running_mean) != self.hidden_layers or len(self.running_var) != self.hidden_layers:
            raise DimensionError("Running statistics must exist for every hidden layer.")
        for i, width in enumerate(self.dims[1:-1]):
            if self.running_mean[i].shape != (width,) or self.running_var[i].shape != (width,):
                raise DimensionError(f"Running statistics of layer {i} do not have width {width}.")
            if np.any(self.running_var[i] <= 0.0):
                raise DimensionError(f"Running variance of layer {i} must be positive.")


@dataclass(slots=True)
class _HiddenCache:
    inputs: np.ndarray
    xhat: np.ndarray
    inv_std: np.ndarray
    pre_activation: np.ndarray


@dataclass(slots=True)
class ForwardCache:
    """
    Intermediate values of a training-mode forward pass, consumed by ``backward``.
    """

    hidden: list[_HiddenCache] = field(default_factory=list)
    last_hidden: np.ndarray | None = None
    output: np.ndarray | None = None


def forward(
    model: MLPModel,
    x: np.ndarray,
    mode: Mode = Mode.INFER,
    update_stats: bool = True,
) -> tuple[np.ndarray, ForwardCache]:
    """
    Run the ranker on a batch.

    :param model: Model.
    :param x: ``batch x input_width`` raw inputs (a single vector is treated as a batch of one).
    :param mode: Training or inference mode.
    :param update_stats: Whether training mode updates the running statistics.
    :return: Outputs in (0, 1) of shape ``batch x n!`` and the cache for ``backward``.
    :raises DimensionError: If the input width does not match.
    :raises NumericError: If an activation is not finite.
    """
    batch: np.ndarray = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if batch.shape[1] != model.input_width:
        raise DimensionError(f"Input width {batch.shape[1]} does not match model input width {model.input_width}.")
    a: np.ndarray = apply_input_transform(batch, model.input_transform)
    cache = ForwardCache()
    train: bool = Mode(mode) == Mode.TRAIN
    p = model.params
    for i in range(model.hidden_layers):
        z: np.ndarray = a @ p[f"W{i}"] + p[f"b{i}"]
        if train:
            mean: np.ndarray = z.mean(axis=0)
            var: np.ndarray = z.var(axis=0)
            if update_stats:
                rows: int = z.shape[0]
                unbiased: np.ndarray = var * rows / (rows - 1) if rows > 1 else var
                model.running_mean[i] = model.bn_momentum * model.running_mean[i] + (1.0 - model.bn_momentum) * mean
                model.running_var[i] = model.bn_momentum * model.running_var[i] + (1.0 - model.bn_momentum) * unbiased
        else:
            mean = model.running_mean[i]
            var = model.running_var[i]
        inv_std: np.ndarray = 1.0 / np.sqrt(var + model.bn_eps)
        xhat: np.ndarray = (z - mean) * inv_std
        y: np.ndarray = p[f"gamma{i}"] * xhat + p[f"beta{i}"]
        if train:
            cache.hidden.append(_HiddenCache(inputs=a, xhat=xhat, inv_std=inv_std, pre_activation=y))
        a = np.maximum(y, 0.0)
    out: np.ndarray = expit(a @ p["W_out"] + p["b_out"])
    if not np.all(np.isfinite(out)):
        raise NumericError("Ranker produced non-finite activations.")
    cache.last_hidden = a
    cache.output = out
    return out, cache


def loss(p: np.ndarray, p_gt: np.ndarray) -> float:
    """
    Batch mean of ``(1 / n!) * ||p - p_gt||^2``.

    :param p: Predictions, ``batch x n!`` or ``n!``.
    :param p_gt: Targets of the same shape.
    :return: Loss.
    :raises DimensionError: If shapes differ.
    """
    pred: np.ndarray = np.asarray(p, dtype=np.float64)
    target: np.ndarray = np.asarray(p_gt, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError(f"Prediction shape {pred.shape} differs from target shape {target.shape}.")
    return float(np.mean((pred - target) ** 2))


def backward(model: MLPModel, cache: ForwardCache, p_gt: np.ndarray) -> Params:
    """
    Analytic gradients of the batch loss for every parameter.

    :param model: Model the training-mode forward pass ran on.
    :param cache: Cache returned by ``forward`` in training mode.
    :param p_gt: Targets, ``batch x n!``.
    :return: Gradients keyed like ``model.params``.
    :raises ValueError: If the cache does not come from a training-mode pass.
    """
    if cache.output is None or cache.last_hidden is None or len(cache.hidden) != model.hidden_layers:
        raise ValueError("backward needs the cache of a training-mode forward pass.")
    out: np.ndarray = cache.output
    target: np.ndarray = np.atleast_2d(np.asarray(p_gt, dtype=np.float64))
    if target.shape != out.shape:
        raise DimensionError(f"Target shape {target.shape} differs from output shape {out.shape}.")
    p = model.params
    grads: Params = {}
    d_out: np.ndarray = 2.0 * (out - target) / out.size
    dz: np.ndarray = d_out * out * (1.0 - out)
    grads["W_out"] = cache.last_hidden.T @ dz
    grads["b_out"] = dz.sum(axis=0)
    da: np.ndarray = dz @ p["W_out"].T
    for i in reversed(range(model.hidden_layers)):
        hc: _HiddenCache = cache.hidden[i]
        dy: np.ndarray = da * (hc.pre_activation > 0.0)
        grads[f"gamma{i}"] = np.sum(dy * hc.xhat, axis=0)
        grads[f"beta{i}"] = dy.sum(axis=0)
        dxhat: np.ndarray = dy * p[f"gamma{i}"]
        rows: int = dxhat.shape[0]
        dz_hidden: np.ndarray = (
            hc.inv_std / rows * (rows * dxhat - dxhat.sum(axis=0) - hc.xhat * np.sum(dxhat * hc.xhat, axis=0))
        )
        grads[f"W{i}"] = hc.inputs.T @ dz_hidden
        grads[f"b{i}"] = dz_hidden.sum(axis=0)
        da = dz_hidden @ p[f"W{i}"].T
    return grads


@dataclass(slots=True)
class AdamState:
    """
    First and second moment estimates per parameter.
    """

    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    step: int = 0


def adam_step(params: Params, grads: Params, state: AdamState, config: TrainConfig, t: int) -> Params:
    """
    One Adam update with bias correction, applied in place.

    :param params: Parameters (updated in place).
    :param grads: Gradients with the same keys.
    :param state: Moment estimates (updated in place).
    :param config: Optimiser settings.
    :param t: 1-based step index.
    :return: The updated parameters.
    :raises ValueError: If t < 1.
    """
    if t < 1:
        raise ValueError(f"Adam step index must be >= 1 (got {t}).")
    b1: float = config.beta1
    b2: float = config.beta2
    for name, g in grads.items():
        m: np.ndarray = state.m.get(name, np.zeros_like(g))
        v: np.ndarray = state.v.get(name, np.zeros_like(g))
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat: np.ndarray = m / (1.0 - b1**t)
        v_hat: np.ndarray = v / (1.0 - b2**t)
        params[name] -= config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
    state.step = t
    return params


def evaluate_loss(model: MLPModel, data: LabeledDataset) -> float:
    """
    Inference-mode loss over a dataset.

    :param model: Model.
    :param data: Dataset.
    :return: Loss.
    """
    out, _ = forward(model, data.inputs(), Mode.INFER)
    return loss(out, data.labels)


def train(
    model: MLPModel,
    train_set: LabeledDataset,
    val_set: LabeledDataset | None,
    config: TrainConfig,
    logger: logging.Logger | None = None,
) -> tuple[MLPModel, TrainHistory]:
    """
    Mini-batch Adam training with a seeded shuffle per epoch.

    The returned model holds the parameters of the epoch with the lowest validation loss (the last epoch
    when there is no validation data).

    :param model: Initial model (not modified).
    :param train_set: Training data.
    :param val_set: Validation data, may be None or empty.
    :param config: Optimiser settings.
    :param logger: Logger.
    :return: Trained model and history.
    :raises TrainingError: If the training set is empty or the loss becomes non-finite.
    :raises DimensionError: If the data widths do not match the model.
    """
    log: logging.Logger = logger or get_logger()
    if len(train_set) == 0:
        raise TrainingError("Training set is empty.")
    for name, data in (("train", train_set), ("val", val_set)):
        if data is None:
            continue
        if data.m * data.h != model.input_width or data.k != model.output_width:
            raise DimensionError(
                f"{name} data of width {data.m * data.h}->{data.k} does not match model {model.input_width}->"
                f"{model.output_width}."
            )
    has_val: bool = val_set is not None and len(val_set) > 0

    current: MLPModel = model.copy()
    current.bn_momentum = config.bn_momentum
    current.bn_eps = config.bn_eps
    current.data_seed = train_set.seed
    rng: np.random.Generator = np.random.default_rng(config.seed)
    state = AdamState()
    x_all: np.ndarray = train_set.inputs()
    y_all: np.ndarray = train_set.labels
    records: list[EpochRecord] = []
    best: MLPModel = current.copy()
    best_val: float = math.inf
    best_epoch: int = 0
    step: int = 0

    for epoch in range(1, config.epochs + 1):
        order: np.ndarray = rng.permutation(len(train_set))
        batch_losses: list[float] = []
        for start in range(0, len(order), config.batch_size):
            idx: np.ndarray = order[start : start + config.batch_size]
            out, cache = forward(current, x_all[idx], Mode.TRAIN)
            batch_loss: float = loss(out, y_all[idx])
            if not math.isfinite(batch_loss):
                raise TrainingError(f"Non-finite training loss at epoch={epoch} step={step + 1}.")
            step += 1
            adam_step(current.params, backward(current, cache, y_all[idx]), state, config, step)
            batch_losses.append(batch_loss)
        train_loss: float = float(np.mean(batch_losses))
        val_loss: float | None = evaluate_loss(current, val_set) if has_val else None  # type: ignore[arg-type]
        if val_loss is not None and not math.isfinite(val_loss):
            raise TrainingError(f"Non-finite validation loss at epoch={epoch}.")
        records.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        log.debug(f"Training epoch={epoch} train_loss={train_loss:.6e} val_loss={val_loss}")

        if not has_val:
            best, best_epoch = current, epoch
        elif val_loss is not None and val_loss < best_val:
            best_val = val_loss
            best = current.copy()
            best_epoch = epoch

    log.info(
        f"Training finished epochs={config.epochs} steps={step} best_epoch={best_epoch} "
        f"train_loss={records[-1].train_loss:.6e} best_val_loss={best_val if has_val else None}"
    )
    return best.copy(), TrainHistory(records=tuple(records), best_epoch=best_epoch)


def predict_scores(model: MLPModel, x: np.ndarray) -> np.ndarray:
    """
    Inference-mode ranker outputs.

    :param model: Model.
    :param x: ``batch x input_width`` raw inputs.
    :return: ``batch x n!`` scores.
    """
    out, _ = forward(model, x, Mode.INFER)
    return out


def predict_permutation(model: MLPModel, C: CoefficientMatrix | np.ndarray) -> int:
    """
    Canonical index of the permutation the ranker rates best.

    :param model: Model.
    :param C: Instance, vectorized row-major.
    :return: Permutation index, ties to the lowest index.
    :raises DimensionError: If the instance does not match the input width.
    """
    x: np.ndarray = C.vec() if isinstance(C, CoefficientMatrix) else np.asarray(C, dtype=np.float64).reshape(-1)
    return best_permutation(predict_scores(model, x[np.newaxis, :])[0])
