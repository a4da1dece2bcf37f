"""Relative performance scores and the epsilon-triggered batch reallocation rule.

Each network's score is the mean of its last ``nu`` epoch losses divided by
the largest epoch loss seen so far. The scores are dimensionless and lie in
(0, 1]. When the generator and discriminator scores differ by more than
``epsilon``, the next epoch gives extra update batches to one network. The
count is proportional to how far the gap exceeds ``epsilon``.
"""
import logging
import math
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

LOSS_FLOOR = 1e-12
GENERATOR = "generator"
DISCRIMINATOR = "discriminator"
NONE = "none"


@dataclass
class LossHistory:
    losses: list = field(default_factory=list)
    running_max: float = 0.0
    floored: list = field(default_factory=list)  # epoch numbers (1-based) that hit the floor

    def __len__(self):
        return len(self.losses)

    @classmethod
    def from_series(cls, values):
        h = cls()
        for v in values:
            record_epoch(h, v)
        return h


@dataclass
class SchedulerConfig:
    nu: int = 5
    epsilon: float = 0.05
    kappa: float = 1.0
    k_max: int = 4
    enabled: bool = True
    direction: str = "higher"  # which score receives the extra batches

    def validate(self):
        if self.nu < 1:
            raise ValueError(f"nu must be >= 1, got {self.nu}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        if self.direction not in ("higher", "lower"):
            raise ValueError(f"direction must be 'higher' or 'lower', got {self.direction!r}")
        return self


@dataclass(frozen=True)
class ScheduleDecision:
    target: str
    extra_batches: int
    rps_g: float
    rps_d: float

    @property
    def delta(self):
        return self.rps_g - self.rps_d


def record_epoch(history, loss):
    """Append one epoch-mean loss. Non-positive values are floored and flagged."""
    loss = float(loss)
    if not math.isfinite(loss):
        raise ValueError(f"non-finite epoch loss {loss!r} at epoch {len(history.losses) + 1}")
    if loss <= 0:
        log.warning("epoch %d loss %.3g <= 0, floored to %g", len(history.losses) + 1, loss,
                    LOSS_FLOOR)
        history.floored.append(len(history.losses) + 1)
        loss = LOSS_FLOOR
    history.losses.append(loss)
    if loss > history.running_max:
        history.running_max = loss
    return history


def rps(history, nu):
    losses = history.losses if isinstance(history, LossHistory) else list(history)
    if nu < 1:
        raise ValueError(f"nu must be >= 1, got {nu}")
    if not losses:
        raise ValueError("rps of an empty loss history")
    peak = history.running_max if isinstance(history, LossHistory) else max(losses)
    if not peak > 0:
        raise ValueError(f"loss history maximum must be positive, got {peak}")
    w = min(nu, len(losses))
    return math.fsum(losses[-w:]) / (w * peak)


def decide(rps_g, rps_d, cfg):
    if not cfg.enabled:
        return ScheduleDecision(NONE, 0, rps_g, rps_d)
    gap = abs(rps_g - rps_d)
    if not gap > cfg.epsilon:
        return ScheduleDecision(NONE, 0, rps_g, rps_d)
    g_higher = rps_g > rps_d
    to_generator = g_higher if cfg.direction == "higher" else not g_higher
    extra = min(cfg.k_max, math.ceil(cfg.kappa * (gap - cfg.epsilon) / cfg.epsilon))
    extra = max(extra, 1)
    return ScheduleDecision(GENERATOR if to_generator else DISCRIMINATOR, extra, rps_g, rps_d)


class AdaptiveScheduler:
    """Holds both loss histories and produces one decision per epoch."""

    def __init__(self, cfg, history_g=None, history_d=None):
        self.cfg = cfg.validate()
        self.history_g = history_g if history_g is not None else LossHistory()
        self.history_d = history_d if history_d is not None else LossHistory()

    def scores(self):
        return rps(self.history_g, self.cfg.nu), rps(self.history_d, self.cfg.nu)

    def current_decision(self):
        if not len(self.history_g) or not len(self.history_d):
            return ScheduleDecision(NONE, 0, float("nan"), float("nan"))
        return decide(*self.scores(), self.cfg)

    def step(self, loss_g, loss_d):
        record_epoch(self.history_g, loss_g)
        record_epoch(self.history_d, loss_d)
        return self.current_decision()
