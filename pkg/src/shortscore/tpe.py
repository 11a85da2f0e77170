"""Tree-structured Parzen Estimator search over a step-lattice space.

After a uniform startup phase, finished trials are split into a good set
(top gamma fraction by objective) and a bad set. Each dimension gets two
densities: truncated-Gaussian Parzen mixtures for numeric dimensions (one
kernel per observed value, bandwidth from the gaps to sorted neighbors,
plus a uniform prior component), smoothed category frequencies for
categorical ones. Candidates are drawn from the good density and the one
maximizing sum(log l - log g) is suggested, snapped back to the lattice.
The objective is maximized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, ValidationError
from .seeding import ROLE_SEARCH, spawn_rng

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Dimension:
    name: str
    kind: str  # int_step | float_step | categorical
    low: float
    high: float
    step: float

    def __post_init__(self) -> None:
        if self.kind not in ("int_step", "float_step", "categorical"):
            raise ConfigError(f"unknown dimension kind {self.kind!r}")
        if self.low > self.high:
            raise ConfigError(f"{self.name}: low {self.low} > high {self.high}")
        if self.step <= 0:
            raise ConfigError(f"{self.name}: step must be positive")

    @property
    def n_steps(self) -> int:
        return int(round((self.high - self.low) / self.step))

    def snap(self, x: float):
        """Nearest lattice value to x, clipped into [low, high]."""
        k = int(round((x - self.low) / self.step))
        k = min(max(k, 0), self.n_steps)
        v = self.low + k * self.step
        return int(round(v)) if self.kind in ("int_step", "categorical") else float(v)

    def lattice(self) -> list:
        return [self.snap(self.low + k * self.step) for k in range(self.n_steps + 1)]

    def contains(self, v: float) -> bool:
        if not (self.low - 1e-9 <= v <= self.high + 1e-9):
            return False
        k = (v - self.low) / self.step
        return abs(k - round(k)) < 1e-6


@dataclass(frozen=True)
class SearchSpace:
    dimensions: tuple[Dimension, ...]

    def __iter__(self):
        return iter(self.dimensions)

    def validate(self, hp: "Hyperparameters") -> None:
        for dim in self.dimensions:
            v = getattr(hp, dim.name)
            if not dim.contains(v):
                raise ValidationError(f"{dim.name}={v} off the {dim.low}..{dim.high} step-{dim.step} lattice")


@dataclass(frozen=True)
class Hyperparameters:
    """One point in the ten-dimensional search space."""

    base_neurons: int
    base_lr: float
    base_iters: int
    gbdt_estimators: int
    gbdt_lr: float
    gbdt_subsample: float
    meta_layers: int
    meta_neurons: int
    meta_lr: float
    meta_iters: int

    def as_dict(self) -> dict:
        return {
            "base_neurons": self.base_neurons,
            "base_lr": self.base_lr,
            "base_iters": self.base_iters,
            "gbdt_estimators": self.gbdt_estimators,
            "gbdt_lr": self.gbdt_lr,
            "gbdt_subsample": self.gbdt_subsample,
            "meta_layers": self.meta_layers,
            "meta_neurons": self.meta_neurons,
            "meta_lr": self.meta_lr,
            "meta_iters": self.meta_iters,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparameters":
        return cls(**d)


@dataclass(frozen=True)
class Trial:
    hp: Optional[Hyperparameters]
    objective: Optional[float]
    seed: int
    fold_scores: tuple[float, ...] = ()
    status: str = "complete"  # complete | failed
    index: int = -1
    error: str = ""

    def __post_init__(self) -> None:
        if self.status not in ("complete", "failed"):
            raise ValidationError(f"unknown trial status {self.status!r}")
        if self.status == "complete":
            if self.objective is None or not self.fold_scores:
                raise ValidationError("complete trials need an objective and fold scores")
            mean = sum(self.fold_scores) / len(self.fold_scores)
            if abs(mean - self.objective) > 1e-12:
                raise ValidationError(
                    f"objective {self.objective} != mean(fold_scores) {mean}"
                )


@dataclass(frozen=True)
class TpeConfig:
    n_startup: int = 20
    n_candidates: int = 24
    gamma: float = 0.25


def default_space() -> SearchSpace:
    """The full ten-dimension search space the scorer is tuned over."""
    return SearchSpace(
        (
            Dimension("base_neurons", "int_step", 50, 750, 10),
            Dimension("base_lr", "float_step", 2e-5, 0.1, 1e-5),
            Dimension("base_iters", "int_step", 10, 1000, 10),
            Dimension("gbdt_estimators", "int_step", 50, 700, 2),
            Dimension("gbdt_lr", "float_step", 2e-5, 0.1, 2e-5),
            Dimension("gbdt_subsample", "float_step", 0.80, 1.00, 0.02),
            Dimension("meta_layers", "categorical", 0, 1, 1),
            Dimension("meta_neurons", "int_step", 10, 200, 2),
            Dimension("meta_lr", "float_step", 1e-5, 0.01, 1e-5),
            Dimension("meta_iters", "int_step", 10, 500, 10),
        )
    )


def space_with_overrides(overrides: dict[str, dict]) -> SearchSpace:
    """default_space with per-dimension {low, high, step} replacements."""
    dims = []
    known = {d.name for d in default_space()}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown search dimensions in overrides: {sorted(unknown)}")
    for dim in default_space():
        ov = overrides.get(dim.name)
        if ov:
            bad = set(ov) - {"low", "high", "step"}
            if bad:
                raise ConfigError(f"{dim.name}: unknown override keys {sorted(bad)}")
            dim = replace(dim, **{k: float(v) for k, v in ov.items()})
        dims.append(dim)
    return SearchSpace(tuple(dims))


def sample_uniform(space: SearchSpace, rng: np.random.Generator) -> Hyperparameters:
    """Independent uniform draw on each dimension's lattice."""
    values = {}
    for dim in space:
        k = int(rng.integers(0, dim.n_steps + 1))
        values[dim.name] = dim.snap(dim.low + k * dim.step)
    return Hyperparameters(**values)


def split_trials(history: Sequence[Trial], gamma: float) -> tuple[list[Trial], list[Trial]]:
    """Top max(1, ceil(gamma*n)) complete trials by objective, then the rest.

    Ties keep the earlier trial ranked first (stable sort on history order).
    """
    complete = [t for t in history if t.status == "complete"]
    if not complete:
        raise ValidationError("no complete trials to split")
    ranked = sorted(complete, key=lambda t: -t.objective)
    n_good = max(1, math.ceil(gamma * len(ranked)))
    return ranked[:n_good], ranked[n_good:]


class _NumericDensity:
    """Truncated-Gaussian Parzen mixture plus one uniform prior component.

    Kernel i sits at observed value x_i with bandwidth max(gap to the sorted
    neighbors) clipped into [step, (high-low)/2]; all components, prior
    included, carry equal weight 1/(n+1).
    """

    def __init__(self, values: Sequence[float], dim: Dimension):
        self.low = dim.low
        self.high = dim.high
        width = dim.high - dim.low
        mus = np.sort(np.asarray(values, dtype=np.float64))
        n = len(mus)
        if n == 0:
            raise ValidationError("density needs at least one observation")
        if width <= 0:
            # degenerate single-point dimension
            self.mus = mus
            self.sigmas = np.full(n, dim.step)
            self.trunc_mass = np.ones(n)
            self.log_uniform = 0.0
            self.degenerate = True
            return
        self.degenerate = False
        gaps = np.diff(mus)
        left = np.concatenate([[np.inf], gaps])
        right = np.concatenate([gaps, [np.inf]])
        bw = np.maximum(left, right)
        bw[~np.isfinite(bw)] = width / 2.0  # single observation
        self.mus = mus
        self.sigmas = np.clip(bw, dim.step, width / 2.0)
        a = (self.low - self.mus) / self.sigmas
        b = (self.high - self.mus) / self.sigmas
        self.trunc_mass = ndtr(b) - ndtr(a)
        self.log_uniform = -math.log(width)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.degenerate:
            return np.full(size, self.mus[0])
        n = len(self.mus)
        comp = rng.integers(0, n + 1, size=size)
        u = rng.random(size)
        out = np.empty(size)
        prior = comp == n
        out[prior] = self.low + u[prior] * (self.high - self.low)
        k = comp[~prior]
        mu, sig, mass = self.mus[k], self.sigmas[k], self.trunc_mass[k]
        lo = ndtr((self.low - mu) / sig)
        out[~prior] = mu + sig * ndtri(lo + u[~prior] * mass)
        return np.clip(out, self.low, self.high)

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        if self.degenerate:
            return np.zeros(len(x))
        z = (x[:, None] - self.mus[None, :]) / self.sigmas[None, :]
        log_kernels = (
            -0.5 * z * z
            - _LOG_SQRT_2PI
            - np.log(self.sigmas[None, :])
            - np.log(self.trunc_mass[None, :])
        )
        n = len(self.mus)
        log_w = -math.log(n + 1)
        stacked = np.concatenate(
            [log_kernels + log_w, np.full((len(x), 1), self.log_uniform + log_w)], axis=1
        )
        m = stacked.max(axis=1, keepdims=True)
        return (m + np.log(np.exp(stacked - m).sum(axis=1, keepdims=True))).ravel()


class _CategoricalDensity:
    """Category frequencies smoothed by one uniform pseudo-observation."""

    def __init__(self, values: Sequence[float], dim: Dimension):
        self.choices = dim.lattice()
        counts = np.array([sum(1 for v in values if v == c) for c in self.choices], dtype=float)
        self.probs = (counts + 1.0 / len(self.choices)) / (counts.sum() + 1.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(len(self.choices), size=size, p=self.probs)
        return np.array([self.choices[i] for i in idx], dtype=np.float64)

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        lookup = {c: math.log(p) for c, p in zip(self.choices, self.probs)}
        return np.array([lookup[int(round(v))] for v in x])


def _density(values: Sequence[float], dim: Dimension):
    if dim.kind == "categorical":
        return _CategoricalDensity(values, dim)
    return _NumericDensity(values, dim)


def suggest(
    history: Sequence[Trial],
    space: SearchSpace,
    rng: np.random.Generator,
    cfg: TpeConfig = TpeConfig(),
) -> Hyperparameters:
    """Next point to evaluate: uniform during startup, then argmax of the
    good/bad density ratio over ``cfg.n_candidates`` draws from the good
    density, snapped to the lattice."""
    complete = [t for t in history if t.status == "complete"]
    if len(complete) < cfg.n_startup:
        return sample_uniform(space, rng)
    good, bad = split_trials(complete, cfg.gamma)
    scores = np.zeros(cfg.n_candidates)
    draws: dict[str, np.ndarray] = {}
    for dim in space:
        l_density = _density([getattr(t.hp, dim.name) for t in good], dim)
        g_density = _density([getattr(t.hp, dim.name) for t in bad], dim)
        x = l_density.sample(rng, cfg.n_candidates)
        scores += l_density.logpdf(x) - g_density.logpdf(x)
        draws[dim.name] = x
    best = int(np.argmax(scores))
    values = {dim.name: dim.snap(float(draws[dim.name][best])) for dim in space}
    return Hyperparameters(**values)


def optimize(
    objective: Callable[[Hyperparameters], object],
    space: SearchSpace,
    n_trials: int = 200,
    seed: int = 0,
    cfg: TpeConfig = TpeConfig(),
    on_trial: Optional[Callable[[Trial], None]] = None,
) -> tuple[Trial, list[Trial]]:
    """Sequential suggest -> evaluate -> record loop, maximizing the objective.

    ``objective`` may return a plain number or a Trial carrying fold scores.
    Exceptions inside the objective mark that trial failed and the search
    continues; if every trial fails an error is raised.
    """
    if n_trials < 1:
        raise ValidationError(f"n_trials must be >= 1, got {n_trials}")
    rng = spawn_rng(seed, ROLE_SEARCH)
    history: list[Trial] = []
    for i in range(n_trials):
        hp = suggest(history, space, rng, cfg)
        try:
            result = objective(hp)
            if isinstance(result, Trial):
                trial = replace(result, hp=hp, index=i)
            else:
                value = float(result)  # type: ignore[arg-type]
                trial = Trial(hp=hp, objective=value, seed=seed, fold_scores=(value,), index=i)
        except Exception as exc:  # failures recorded, not fatal
            trial = Trial(
                hp=hp, objective=None, seed=seed, status="failed", index=i, error=str(exc)
            )
        history.append(trial)
        if on_trial is not None:
            on_trial(trial)
    complete = [t for t in history if t.status == "complete"]
    if not complete:
        raise ValidationError("all trials failed")
    best = max(complete, key=lambda t: t.objective)
    return best, history


def trial_record(trial: Trial) -> dict:
    rec = {
        "index": trial.index,
        "hp": trial.hp.as_dict() if trial.hp is not None else None,
        "fold_scores": list(trial.fold_scores),
        "objective": trial.objective,
        "status": trial.status,
        "seed": trial.seed,
    }
    if trial.error:
        rec["error"] = trial.error
    return rec


def write_history(history: Sequence[Trial], path: str | Path) -> None:
    """One JSON record per line; byte-stable for a fixed seed in sequential mode."""
    lines = [json.dumps(trial_record(t), sort_keys=True) for t in history]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
