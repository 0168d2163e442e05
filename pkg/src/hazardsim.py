"""
Монте-Карло для конвейеров со случайными конфликтами.

Время обработки первого элемента равно глубине p, каждый следующий элемент
завершается через J циклов после предыдущего, где J - случайный тип конфликта
с распределением b_1..b_p. Результаты считаются в циклах (h = 1).
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from tqdm import tqdm

import config
from model import RestartModel, Workload, hazard_expectation, positive_part, require_count

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HazardDistribution:
    """probs[j - 1] - вероятность того, что элемент обрабатывается j циклов"""

    probs: Tuple[float, ...]

    def __post_init__(self):
        if not self.probs:
            raise ValueError("Распределение типов конфликтов пусто")
        if any(b < 0 for b in self.probs):
            raise ValueError(f"Вероятности не могут быть отрицательными: {self.probs}")
        if abs(sum(self.probs) - 1) > config.PROB_TOL:
            raise ValueError(f"Сумма вероятностей b_j должна быть равна 1, получено: {sum(self.probs)}")

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.probs) > 0) + 1

    @property
    def mean_cycles(self) -> float:
        """b_1 + 2 b_2 + ... + p b_p"""
        return sum(j * b for j, b in enumerate(self.probs, 1))

    def probability(self, j: int) -> float:
        return self.probs[j - 1] if 1 <= j <= len(self.probs) else 0.0

    def analytic_mean(self, p: int, n: int) -> float:
        return hazard_expectation(p, Workload(n), self.probs)

    def premise_holds(self, p: int) -> bool:
        """Хотя бы одна ступень активна в любой момент: типов больше p не бывает"""
        return all(b == 0 for b in self.probs[p:])


@dataclass(frozen=True)
class SampleStats:
    mean: float
    stderr: float
    trials: int
    premise_ok: bool = True


def _point_masses(p: int, masses) -> HazardDistribution:
    probs = [0.0] * p
    for j, mass in masses:
        # совпадающие точки носителя складываются
        probs[j - 1] += mass
    return HazardDistribution(tuple(probs))


def simplified_distribution(p: int, q: int) -> HazardDistribution:
    """Один конфликт типа (p - q)^+ + 1 с вероятностью 1/q, остальное - тип 1"""
    require_count("p", p)
    require_count("q", q)
    hazard = positive_part(p - q) + 1
    return _point_masses(p, [(1, 1 - 1 / q), (hazard, 1 / q)])


def restart_distribution(p: int, q: int, r: RestartModel) -> HazardDistribution:
    """Рестарт (тип p) с вероятностью b плюс конфликт типа (p - q)^+ + 1 с вероятностью (1 - b)/q"""
    require_count("p", p)
    require_count("q", q)
    b = r.b
    hazard = positive_part(p - q) + 1
    return _point_masses(p, [(1, (1 - b) * (1 - 1 / q)), (hazard, (1 - b) / q), (p, b)])


def _draw(rng: np.random.Generator, d: HazardDistribution, size) -> np.ndarray:
    support = d.support
    weights = np.asarray(d.probs, dtype=float)[support - 1]
    return rng.choice(support, size=size, p=weights / weights.sum())


def sample_cycles(p: int, d: HazardDistribution, n: int, seed: int) -> int:
    """Одна реализация: p + J_2 + ... + J_n"""
    require_count("p", p)
    require_count("n", n)
    if n == 1:
        return p
    rng = np.random.default_rng(seed)
    return int(p + _draw(rng, d, n - 1).sum())


def monte_carlo_mean(p: int, d: HazardDistribution, n: int, trials: int, seed: int, progress: bool = False) -> SampleStats:
    """
    Выборочное среднее и стандартная ошибка по trials независимым прогонам.

    Прогоны делятся на пакеты по MONTE_CARLO_BATCH, у каждого пакета свой
    поток случайных чисел из SeedSequence(seed), поэтому результат зависит только от seed.
    """
    require_count("trials", trials, minimum=2)
    require_count("n", n)

    premise_ok = d.premise_holds(p)
    if not premise_ok:
        logger.warning(f"Распределение допускает типы конфликтов больше глубины p={p}: "
                       f"предположение об активности хотя бы одной ступени нарушено")

    batches = math.ceil(trials / config.MONTE_CARLO_BATCH)
    streams = np.random.SeedSequence(seed).spawn(batches)

    samples = []
    remaining = trials
    for stream in tqdm(streams, desc="Монте-Карло", disable=not progress):
        size = min(remaining, config.MONTE_CARLO_BATCH)
        rng = np.random.default_rng(stream)
        if n == 1:
            samples.append(np.full(size, p, dtype=np.int64))
        else:
            samples.append(p + _draw(rng, d, (size, n - 1)).sum(axis=1))
        remaining -= size

    values = np.concatenate(samples)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(trials))

    logger.info(f"Монте-Карло: p={p}, n={n}, прогонов={trials}, среднее={mean:.4f} ± {stderr:.4f}")
    return SampleStats(mean=mean, stderr=stderr, trials=trials, premise_ok=premise_ok)
