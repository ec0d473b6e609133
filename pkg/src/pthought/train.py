"""Mini-batch training: Adam updates, per-epoch shuffling, loss tracing.

Batches are padded with PAD and padded steps are masked out of the loss,
so the mean loss is comparable across batch compositions. Everything is
deterministic under the config seed; a checkpoint written at an epoch
boundary resumes bit-exactly because it carries the optimizer moments and
the shuffle RNG state.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import model as pmodel
from . import numkit as nk
from .corpus import SentencePair
from .errors import NumericError
from .model import ModelParams, batched_dual_loss, named_parameters

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    alpha: float = 5.0
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 4
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_seq_len: int = 30
    unfreeze_embeddings: bool = False
    grad_clip: float | None = None  # max global norm; off by default

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


@dataclass
class LossRecord:
    step: int
    l_auto: float
    l_para: float
    total: float


@dataclass
class AdamState:
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    named_params: list[tuple[str, nk.Tensor]],
    state: AdamState,
    config,
    grads: dict[str, np.ndarray] | None = None,
) -> None:
    """One Adam update over every named tensor, in list order.

    ``config`` needs learning_rate, beta1, beta2 and eps attributes.
    Gradients default to each tensor's .grad buffer.
    """
    state.t += 1
    t = state.t
    b1, b2 = config.beta1, config.beta2
    lr, eps = config.learning_rate, config.eps
    clip = getattr(config, "grad_clip", None)
    scale = 1.0
    if clip is not None:
        sq = 0.0
        for name, p in named_params:
            g = grads[name] if grads is not None else p.grad
            sq += float((g * g).sum())
        norm = math.sqrt(sq)
        if norm > clip:
            scale = clip / norm
    for name, p in named_params:
        g = grads[name] if grads is not None else p.grad
        if g is None:
            raise NumericError(f"adam_step: no gradient for tensor {name!r}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"adam_step: non-finite gradient for tensor {name!r}")
        if scale != 1.0:
            g = g * scale
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


def write_loss_trace(path: str, records: list[LossRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step\tl_auto\tl_para\ttotal\n")
        for r in records:
            fh.write(f"{r.step}\t{r.l_auto!r}\t{r.l_para!r}\t{r.total!r}\n")


class Trainer:
    """Stateful training loop over sentence pairs.

    Checkpoints written by :meth:`save` restore through :meth:`load` to a
    trainer whose next step is bit-identical to uninterrupted training.
    """

    def __init__(
        self,
        pairs: list[SentencePair],
        params: ModelParams,
        config: TrainConfig,
        heldout: list[SentencePair] | None = None,
    ) -> None:
        if not pairs:
            raise ValueError("train: empty pair list")
        self.pairs = pairs
        self.params = params
        self.config = config
        self.heldout = heldout or []
        self.params.embedding_trainable = config.unfreeze_embeddings
        self.named = named_parameters(params)
        self.adam = AdamState()
        self.shuffle_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
        self.step_count = 0
        self.epoch_count = 0
        self.trace: list[LossRecord] = []
        self.heldout_trace: list[tuple[int, float]] = []

    def _batches(self) -> list[list[SentencePair]]:
        order = self.shuffle_rng.permutation(len(self.pairs))
        size = self.config.batch_size
        return [
            [self.pairs[i] for i in order[lo : lo + size]]
            for lo in range(0, len(order), size)
        ]

    def step(self, batch: list[SentencePair]) -> LossRecord:
        with nk.Tape() as tape:
            total, l_auto, l_para = batched_dual_loss(batch, self.params, self.config.alpha)
        if not np.isfinite(total.data):
            raise NumericError(f"train: non-finite loss at step {self.step_count}")
        nk.backward(tape, total)
        adam_step(self.named, self.adam, self.config)
        self.step_count += 1
        record = LossRecord(
            step=self.step_count,
            l_auto=float(l_auto.data),
            l_para=float(l_para.data),
            total=float(total.data),
        )
        self.trace.append(record)
        return record

    def heldout_loss(self) -> float:
        """Mean total loss over the held-out pairs, without touching weights."""
        if not self.heldout:
            return float("nan")
        total, _, _ = batched_dual_loss(self.heldout, self.params, self.config.alpha)
        return float(total.data)

    def run_epoch(self) -> float:
        """One pass over the shuffled pairs; returns the mean total loss."""
        losses = [self.step(batch).total for batch in self._batches()]
        self.epoch_count += 1
        mean_loss = float(np.mean(losses))
        if self.heldout:
            held = self.heldout_loss()
            self.heldout_trace.append((self.epoch_count, held))
            logger.info(
                "epoch %d: train loss %.6f, held-out loss %.6f",
                self.epoch_count, mean_loss, held,
            )
        else:
            logger.info("epoch %d: train loss %.6f", self.epoch_count, mean_loss)
        return mean_loss

    def save(self, path: str, vocab_tokens, vocab_sha256: str) -> None:
        pmodel.save_checkpoint(
            path,
            self.params,
            alpha=self.config.alpha,
            seed=self.config.seed,
            vocab_tokens=vocab_tokens,
            vocab_sha256=vocab_sha256,
            optimizer={"t": self.adam.t, "m": self.adam.m, "v": self.adam.v},
            extra={
                "step_count": self.step_count,
                "epoch_count": self.epoch_count,
                "train_config": asdict(self.config),
                "shuffle_rng_state": json.loads(json.dumps(self.shuffle_rng.bit_generator.state)),
            },
        )

    @classmethod
    def load(
        cls,
        path: str,
        pairs: list[SentencePair],
        heldout: list[SentencePair] | None = None,
    ) -> "Trainer":
        params, meta = pmodel.load_checkpoint(path)
        config = TrainConfig(**meta["extra"]["train_config"])
        trainer = cls(pairs, params, config, heldout=heldout)
        opt = meta.get("optimizer")
        if opt is not None:
            trainer.adam = AdamState(t=opt["t"], m=opt["m"], v=opt["v"])
        trainer.step_count = meta["extra"]["step_count"]
        trainer.epoch_count = meta["extra"]["epoch_count"]
        state = meta["extra"]["shuffle_rng_state"]
        trainer.shuffle_rng.bit_generator.state = state
        return trainer


def train(
    pairs: list[SentencePair],
    params: ModelParams,
    config: TrainConfig,
    heldout: list[SentencePair] | None = None,
    checkpoint_dir: str | None = None,
    vocab_tokens: tuple[str, ...] = (),
    vocab_sha256: str = "",
) -> tuple[ModelParams, list[LossRecord]]:
    """Train for config.epochs epochs; optionally checkpoint at each epoch end."""
    trainer = Trainer(pairs, params, config, heldout=heldout)
    for epoch in range(config.epochs):
        trainer.run_epoch()
        if checkpoint_dir is not None:
            trainer.save(
                f"{checkpoint_dir}/model_epoch_{epoch + 1}.npz", vocab_tokens, vocab_sha256
            )
    return trainer.params, trainer.trace
