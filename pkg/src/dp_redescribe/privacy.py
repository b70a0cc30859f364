"""Differential privacy primitives and budget accounting.

The curator handle is the trust boundary: it owns the raw dataset, and
everything computed through it either stays server-side or crosses to the
caller as a noised value while charging the budget accountant. A test-only
no-noise mode disables the noise (outputs are then non-private) but keeps
the accounting identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset

BUDGET_SLACK = 1e-9


class BudgetError(RuntimeError):
    """Raised when a charge would exceed the total privacy budget."""


class RandomSource:
    """Reproducible randomness: identical (seed, stream) gives identical draws.

    Child streams created via substream() are deterministic functions of the
    parent identity, so independent consumers (trials, chains) can draw
    concurrently without sharing state.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._rng: np.random.Generator | None = None

    @property
    def rng(self) -> np.random.Generator:
        if self._rng is None:
            self._rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence([self.seed, self.stream]))
            )
        return self._rng

    def substream(self, index: int) -> "RandomSource":
        return RandomSource(self.seed, (self.stream + 1) * 1000003 + index)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


@dataclass
class BudgetAccountant:
    """Tracks epsilon expenditure as labeled charges.

    Parallel composition over a partition is a single charge recorded by the
    caller, never one per cell.
    """

    total: float
    spent: float = 0.0
    ledger: list[tuple[str, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("budget must be positive")

    def charge(self, label: str, epsilon: float) -> None:
        if epsilon <= 0:
            raise ValueError("charge must be positive")
        if self.spent + epsilon > self.total + BUDGET_SLACK:
            raise BudgetError(
                f"charge {label!r} of {epsilon} exceeds remaining budget "
                f"({self.total - self.spent} left)"
            )
        self.spent += epsilon
        self.ledger.append((label, epsilon))

    def ledger_rows(self) -> list[dict]:
        return [{"label": lbl, "epsilon": eps} for lbl, eps in self.ledger]


@dataclass
class CuratorHandle:
    """Server-side handle bundling the raw data with its accountant."""

    dataset: Dataset
    accountant: BudgetAccountant
    no_noise: bool = False


def laplace_noise(scale: float, rng: RandomSource) -> float:
    """One draw from Laplace(0, scale)."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return float(rng.rng.laplace(0.0, scale))


def laplace_noise_array(scale: float, size, rng: RandomSource) -> np.ndarray:
    if scale <= 0:
        raise ValueError("scale must be positive")
    return rng.rng.laplace(0.0, scale, size=size)


def noisy_count(true_count: float, eps_part: float, rng: RandomSource,
                no_noise: bool = False) -> float:
    """true_count + Laplace(0, 1/eps_part); unclamped, so it can be negative
    or fractional. Clamping is the consumer's decision."""
    if no_noise:
        return float(true_count)
    if eps_part <= 0:
        raise ValueError("epsilon share must be positive")
    return float(true_count) + laplace_noise(1.0 / eps_part, rng)


def exp_mech_probabilities(qualities: np.ndarray, eps_part: float,
                           sensitivity: float) -> np.ndarray:
    """Closed-form exponential mechanism distribution over candidates."""
    q = np.asarray(qualities, dtype=np.float64)
    logits = eps_part * q / (2.0 * sensitivity)
    logits -= logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def exp_mech_select(candidates, qualities, eps_part: float,
                    sensitivity: float, rng: RandomSource,
                    no_noise: bool = False) -> int:
    """Pick the index of a candidate with probability proportional to
    exp(eps * quality / (2 * sensitivity)), uniform base measure.

    In no-noise mode returns the argmax (ties to the lowest index).
    """
    if len(candidates) == 0:
        raise ValueError("no candidates to select from")
    q = np.asarray(qualities, dtype=np.float64)
    if q.shape[0] != len(candidates):
        raise ValueError("quality vector length mismatch")
    if not np.all(np.isfinite(q)):
        raise ValueError("qualities must be finite")
    if no_noise:
        return int(np.argmax(q))
    if eps_part <= 0:
        raise ValueError("epsilon share must be positive")
    if sensitivity <= 0:
        raise ValueError("sensitivity must be positive")
    probs = exp_mech_probabilities(q, eps_part, sensitivity)
    return int(rng.rng.choice(len(candidates), p=probs))


def mh_accept(score_old: float, score_new: float, eps_part: float,
              sensitivity: float, rng: RandomSource) -> bool:
    """Metropolis acceptance for the exponential-mechanism random walk:
    accept with probability min{1, exp(eps*(new - old) / (2*sensitivity))}."""
    if not (np.isfinite(score_old) and np.isfinite(score_new)):
        raise ValueError("scores must be finite")
    log_ratio = eps_part * (score_new - score_old) / (2.0 * sensitivity)
    if log_ratio >= 0:
        return True
    return bool(rng.rng.random() < np.exp(log_ratio))
