"""Training losses and the optimizer loop for the MiniPPGN denoiser.

Two objectives are provided. The variational bound draws a timestep uniformly
and scales the sampled term by T, so its expectation over timesteps equals the
full bound: a per-edge KL between the exact reverse posterior and the model's
reverse marginal for t >= 2, and the reconstruction cross-entropy at t = 1.
The simple loss is a reweighted cross-entropy between the clean graph and the
model prediction, with weight ``1 - 2*beta_bar_t + 1/T``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import rel_entr

from . import checkpoint
from .denoiser import Denoiser, DenoiserOutput
from .diffusion import noise_graph, posterior_cases
from .graphs import Graph, GraphBatch, pair_count
from .ppgn import MiniPPGNParams, _backward_impl, _forward_impl, init_params
from .schedule import NoiseSchedule, make_schedule
from .seeding import derive_rng

__all__ = [
    "LOG_CLAMP",
    "KL_CLAMP",
    "DivergenceError",
    "LossResult",
    "TraceRow",
    "TrainConfig",
    "TrainState",
    "TrainResult",
    "bernoulli_kl",
    "loss_vb",
    "loss_simple",
    "simple_weight",
    "per_edge_cross_entropy",
    "train",
    "save_state",
    "load_state",
    "write_trace",
]

LOG_CLAMP = 1e-12  # probability floor inside logarithms
KL_CLAMP = 1e-6    # floor/ceiling for model probabilities inside KL terms


class DivergenceError(RuntimeError):
    """Training loss became non-finite or absurd; carries the last good state."""

    def __init__(self, message: str, last_state: "TrainState", trace: list["TraceRow"]):
        super().__init__(message)
        self.last_state = last_state
        self.trace = trace


def bernoulli_kl(q1: float, p1: float) -> float:
    """KL(Bernoulli(q1) || Bernoulli(p1)) in nats, with 0*log(0) = 0."""
    if not 0 <= q1 <= 1:
        raise ValueError(f"q1 must lie in [0, 1], got {q1}")
    if p1 in (0.0, 1.0):
        if q1 == p1:
            return 0.0
        raise OverflowError(f"KL(Ber({q1}) || Ber({p1})) is infinite")
    if not 0 < p1 < 1:
        raise ValueError(f"p1 must lie in (0, 1), got {p1}")
    return float(rel_entr(q1, p1) + rel_entr(1 - q1, 1 - p1))


@dataclass
class LossResult:
    """Scalar loss plus the gradient payload for backpropagation."""

    value: float
    t: int
    a_t: Graph
    dlogits: np.ndarray  # d(value) / d(denoiser logits)
    prior_term: float = 0.0  # constant L_T summand of the bound (0 here)


def _cross_entropy(a0: np.ndarray, probs: np.ndarray) -> float:
    p = np.clip(probs, LOG_CLAMP, 1 - LOG_CLAMP)
    return float(-np.sum(np.where(a0, np.log(p), np.log1p(-p))))


def _draw(g0: Graph, schedule: NoiseSchedule, rng, t, a_t):
    if t is None:
        if rng is None:
            raise ValueError("either rng or an explicit t must be supplied")
        t = int(rng.integers(1, schedule.steps + 1))
    if a_t is None:
        if rng is None:
            raise ValueError("either rng or an explicit a_t must be supplied")
        a_t = noise_graph(g0, schedule, t, rng)
    return t, a_t


def loss_vb(
    denoiser: Denoiser,
    g0: Graph,
    schedule: NoiseSchedule,
    rng: np.random.Generator | None = None,
    *,
    t: int | None = None,
    a_t: Graph | None = None,
) -> LossResult:
    """One-sample estimate of the variational bound, scaled to be unbiased.

    Since the schedule pins the cumulative flip probability at 1/2, the
    prior-mismatch term of the bound is exactly zero and only reported.
    """
    t, a_t = _draw(g0, schedule, rng, t, a_t)
    out = denoiser.denoise(a_t, t)
    a0 = g0.edge_array()
    at = a_t.edge_array()
    T = schedule.steps

    if t == 1:
        value = T * _cross_entropy(a0, out.probs)
        dlogits = T * (out.probs - a0)
        return LossResult(value=value, t=t, a_t=a_t, dlogits=dlogits)

    c = posterior_cases(
        float(schedule.beta[t - 1]),
        float(schedule.beta_bar[t - 1]),
        float(schedule.beta_bar[t]),
    )
    # true posterior P(A_{t-1}=1 | a_t, a_0) per pair
    q1 = np.where(at, np.where(a0, c[(1, 1)], c[(1, 0)]),
                  np.where(a0, c[(0, 1)], c[(0, 0)]))
    # model reverse marginal, mixing the posterior cases with predicted p(A_0)
    c1 = np.where(at, c[(1, 1)], c[(0, 1)])
    c0 = np.where(at, c[(1, 0)], c[(0, 0)])
    p1 = out.probs * c1 + (1 - out.probs) * c0
    p1c = np.clip(p1, KL_CLAMP, 1 - KL_CLAMP)
    kl = rel_entr(q1, p1c) + rel_entr(1 - q1, 1 - p1c)
    value = T * float(kl.sum())

    interior = (p1 > KL_CLAMP) & (p1 < 1 - KL_CLAMP)
    dkl_dp1 = np.where(interior, -q1 / p1c + (1 - q1) / (1 - p1c), 0.0)
    dlogits = T * dkl_dp1 * (c1 - c0) * out.probs * (1 - out.probs)
    return LossResult(value=value, t=t, a_t=a_t, dlogits=dlogits)


def simple_weight(schedule: NoiseSchedule, t: int) -> float:
    """Timestep weight ``1 - 2*beta_bar_t + 1/T`` of the simple loss."""
    return 1 - 2 * float(schedule.beta_bar[t]) + 1 / schedule.steps


def loss_simple(
    denoiser: Denoiser,
    g0: Graph,
    schedule: NoiseSchedule,
    rng: np.random.Generator | None = None,
    *,
    t: int | None = None,
    a_t: Graph | None = None,
) -> LossResult:
    """Reweighted cross-entropy between the clean graph and the prediction."""
    t, a_t = _draw(g0, schedule, rng, t, a_t)
    out = denoiser.denoise(a_t, t)
    a0 = g0.edge_array()
    w = simple_weight(schedule, t)
    value = w * _cross_entropy(a0, out.probs)
    dlogits = w * (out.probs - a0)
    return LossResult(value=value, t=t, a_t=a_t, dlogits=dlogits)


LOSSES = {"vb": loss_vb, "simple": loss_simple}


def per_edge_cross_entropy(
    denoiser: Denoiser,
    g0: Graph,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    rounds: int = 4,
) -> float:
    """Unweighted cross-entropy per pair, averaged over all t and fresh noise."""
    m = pair_count(g0.n)
    a0 = g0.edge_array()
    total = 0.0
    count = 0
    for t in range(1, schedule.steps + 1):
        for _ in range(rounds):
            a_t = noise_graph(g0, schedule, t, rng)
            total += _cross_entropy(a0, denoiser.denoise(a_t, t).probs)
            count += m
    return total / count


@dataclass
class TrainConfig:
    """Optimization settings; defaults follow the experimental setup."""

    epochs: int
    seed: int
    loss: str = "simple"
    steps: int = 32
    schedule: str = "linear"
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lr_decay: float = 0.999  # multiplicative decay of the learning rate per epoch
    blocks: int = 6
    hidden: int = 16
    checkpoint_every: int = 50
    divergence_limit: float = 1e6

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {sorted(LOSSES)}, got {self.loss!r}")
        for name in ("epochs", "steps", "batch_size", "blocks", "hidden", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class TrainState:
    """Weights, Adam moments, counters, and the training RNG."""

    params: MiniPPGNParams
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int
    epoch: int
    rng: np.random.Generator
    best_loss: float = math.inf

    def copy(self) -> "TrainState":
        clone_rng = np.random.Generator(type(self.rng.bit_generator)())
        clone_rng.bit_generator.state = self.rng.bit_generator.state
        return TrainState(
            params=self.params.copy(),
            m={k: a.copy() for k, a in self.m.items()},
            v={k: a.copy() for k, a in self.v.items()},
            step=self.step,
            epoch=self.epoch,
            rng=clone_rng,
            best_loss=self.best_loss,
        )


@dataclass
class TraceRow:
    epoch: int
    step: int
    loss: float
    t_mean: float


@dataclass
class TrainResult:
    state: TrainState
    best_state: TrainState
    trace: list[TraceRow]


def _fresh_state(config: TrainConfig) -> TrainState:
    params = init_params(derive_rng(config.seed, "init"), config.blocks, config.hidden)
    return TrainState(
        params=params,
        m={k: np.zeros_like(a) for k, a in params.tensors.items()},
        v={k: np.zeros_like(a) for k, a in params.tensors.items()},
        step=0,
        epoch=0,
        rng=derive_rng(config.seed, "train"),
    )


def save_state(path: str | Path, state: TrainState, config: TrainConfig) -> None:
    meta = {
        "step": state.step,
        "epoch": state.epoch,
        "best_loss": state.best_loss,
        "rng_state": state.rng.bit_generator.state,
    }
    checkpoint.save_payload(path, state.params, state.m, state.v, asdict(config), meta)


def load_state(path: str | Path) -> tuple[TrainState, TrainConfig]:
    params, m, v, config_dict, meta = checkpoint.load_payload(path)
    rng_state = meta["rng_state"]
    bit_gen = getattr(np.random, rng_state["bit_generator"])()
    rng = np.random.Generator(bit_gen)
    rng.bit_generator.state = rng_state
    state = TrainState(
        params=params,
        m=m,
        v=v,
        step=int(meta["step"]),
        epoch=int(meta["epoch"]),
        rng=rng,
        best_loss=float(meta["best_loss"]),
    )
    return state, TrainConfig(**config_dict)


def _adam_step(state: TrainState, grads: dict[str, np.ndarray], lr: float, cfg: TrainConfig):
    state.step += 1
    b1, b2 = cfg.beta1, cfg.beta2
    correction1 = 1 - b1 ** state.step
    correction2 = 1 - b2 ** state.step
    for name, p in state.params.tensors.items():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        p -= lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


class _FixedOutput:
    """Denoiser stand-in returning one precomputed output (training fast path)."""

    def __init__(self, out: DenoiserOutput):
        self._out = out

    def denoise(self, graph, step):
        return self._out


def _loss_and_grads(config, schedule, params, g0, t, a_t):
    logits, cache = _forward_impl(params, a_t, float(schedule.beta_bar[t]))
    out = DenoiserOutput.from_logits(logits)
    loss_fn = LOSSES[config.loss]
    res = loss_fn(_FixedOutput(out), g0, schedule, t=t, a_t=a_t)
    grads = _backward_impl(params, cache, res.dlogits)
    return res, grads


def train(
    config: TrainConfig,
    dataset: GraphBatch,
    out_dir: str | Path | None = None,
    resume_from: str | Path | None = None,
) -> TrainResult:
    """Run shuffled-minibatch Adam training; deterministic given the seed.

    Checkpoints land in ``out_dir`` (when given) every ``checkpoint_every``
    epochs as ``checkpoint.last``, with the best-epoch-loss weights kept in
    ``checkpoint.best``. A non-finite or runaway loss aborts with
    :class:`DivergenceError` carrying the last completed epoch's state.
    """
    schedule = make_schedule(config.schedule, config.steps)
    if resume_from is not None:
        state, saved_config = load_state(resume_from)
        saved, wanted = asdict(saved_config), asdict(config)
        saved.pop("epochs")  # resuming may extend the run
        wanted.pop("epochs")
        if saved != wanted:
            raise ValueError("checkpoint config does not match the requested config")
        if state.epoch > config.epochs:
            raise ValueError(
                f"checkpoint is already at epoch {state.epoch} > requested {config.epochs}"
            )
    else:
        state = _fresh_state(config)

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    best_state = state.copy()
    trace: list[TraceRow] = []
    last_good = state.copy()

    for epoch in range(state.epoch, config.epochs):
        lr = config.learning_rate * config.lr_decay**epoch
        order = state.rng.permutation(len(dataset))
        epoch_loss_sum = 0.0

        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            grad_sum = {k: np.zeros_like(a) for k, a in state.params.tensors.items()}
            loss_sum = 0.0
            t_sum = 0.0
            for idx in batch:
                g0 = dataset[int(idx)]
                t = int(state.rng.integers(1, config.steps + 1))
                a_t = noise_graph(g0, schedule, t, state.rng)
                res, grads = _loss_and_grads(config, schedule, state.params, g0, t, a_t)
                loss_sum += res.value
                t_sum += t
                for name in grad_sum:
                    grad_sum[name] += grads[name]

            scale = 1.0 / len(batch)
            batch_loss = loss_sum * scale
            if not math.isfinite(batch_loss) or batch_loss > config.divergence_limit:
                raise DivergenceError(
                    f"loss diverged at epoch {epoch} step {state.step} ({batch_loss})",
                    last_state=last_good,
                    trace=trace,
                )
            for name in grad_sum:
                grad_sum[name] *= scale
            _adam_step(state, grad_sum, lr, config)
            trace.append(TraceRow(epoch, state.step, batch_loss, t_sum / len(batch)))
            epoch_loss_sum += loss_sum

        state.epoch = epoch + 1
        epoch_loss = epoch_loss_sum / len(dataset)
        if epoch_loss < state.best_loss:
            state.best_loss = epoch_loss
            best_state = state.copy()
            if out_path is not None:
                save_state(out_path / "checkpoint.best", best_state, config)
        last_good = state.copy()
        if out_path is not None and (epoch + 1) % config.checkpoint_every == 0:
            save_state(out_path / "checkpoint.last", state, config)

    if out_path is not None:
        save_state(out_path / "checkpoint.last", state, config)
    return TrainResult(state=state, best_state=best_state, trace=trace)


def write_trace(path: str | Path, trace: list[TraceRow]) -> None:
    """Loss trace as CSV with columns epoch, step, loss, t_mean."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "step", "loss", "t_mean"])
        for row in trace:
            writer.writerow([row.epoch, row.step, repr(row.loss), repr(row.t_mean)])
