"""
Аналитические модели ограниченного конвейера.

Ограниченный конвейер: p ступеней, из которых одновременно активны не более q.
Цикл конвейера h = t_p/p + t_o. Все функции чистые и работают над
неизменяемыми значениями.
"""

import math
import numbers
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

import config


class PreconditionError(ValueError):
    """Нарушены условия применимости аналитической формулы"""


def positive_part(x):
    """x^+ = x при x >= 0, иначе 0"""
    return x if x > 0 else 0


def require_count(name: str, value, minimum: int = 1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < minimum:
        raise ValueError(f"{name} должно быть целым >= {minimum}, получено: {value!r}")


def _require_positive(name: str, value: float):
    if not value > 0:
        raise PreconditionError(f"{name} должно быть > 0 для формулы оптимальной глубины, получено: {value}")


@dataclass(frozen=True)
class PipelineConfig:
    """Параметры однородного ограниченного конвейера"""

    p: int
    q: int
    t_p: float
    t_o: float

    def __post_init__(self):
        require_count("p", self.p)
        require_count("q", self.q)
        if self.t_p < 0 or self.t_o < 0:
            raise ValueError(f"Задержки не могут быть отрицательными: t_p={self.t_p}, t_o={self.t_o}")
        if self.t_p == 0 and self.t_o == 0:
            raise ValueError("t_p и t_o одновременно равны нулю")

    @property
    def h(self) -> float:
        return cycle_time(self)

    def with_depth(self, p: int) -> "PipelineConfig":
        return replace(self, p=p)

    @classmethod
    def unit_cycle(cls, p: int, q: int) -> "PipelineConfig":
        """Конфигурация с h = 1 (t_p = 0, t_o = 1): время измеряется в циклах"""
        return cls(p=p, q=q, t_p=0.0, t_o=1.0)


@dataclass(frozen=True)
class Workload:
    n: int

    def __post_init__(self):
        require_count("n", self.n)


@dataclass(frozen=True)
class RestartModel:
    b: float

    def __post_init__(self):
        if not 0 <= self.b <= 1:
            raise ValueError(f"Вероятность рестарта b должна лежать в [0, 1], получено: {self.b}")


@dataclass(frozen=True)
class HyperbolaCoeffs:
    """Коэффициенты функции f(x) = A x + B + C / x"""

    A: float
    B: float
    C: float

    def value(self, x: float) -> float:
        return self.A * x + self.B + self.C / x

    def argmin(self) -> Optional[float]:
        # при A = 0 функция убывает на бесконечности и минимума нет
        if self.A <= 0:
            return None
        return math.sqrt(self.C / self.A)


@dataclass(frozen=True)
class DepthRecommendation:
    real_optimum: float
    integer_optimum: int
    predicted_time: float
    model: str = "exact"


def cycle_time(cfg: PipelineConfig) -> float:
    """Цикл конвейера h = t_p/p + t_o"""
    return cfg.t_p / cfg.p + cfg.t_o


def bounded_cycles(p: int, q: int, n: int) -> int:
    """Время обработки n элементов в циклах: p + n - 1 + (p - q)^+ [(n - 1)/q]"""
    return p + n - 1 + positive_part(p - q) * ((n - 1) // q)


def bounded_time(cfg: PipelineConfig, w: Workload) -> float:
    """Точное время обработки n элементов ограниченным конвейером"""
    return bounded_cycles(cfg.p, cfg.q, w.n) * cycle_time(cfg)


def hyperbola_coeffs(q: int, w: Workload, t_p: float, t_o: float) -> Tuple[HyperbolaCoeffs, HyperbolaCoeffs]:
    """
    Коэффициенты двух гипербол, из точек которых состоит график T_q(x, n).

    Returns:
        (f_q для x >= q, f для x < q)
    """
    require_count("q", q)
    whole, rest = divmod(w.n - 1, q)

    constrained = HyperbolaCoeffs(
        A=t_o * (1 + whole),
        B=t_o * rest + t_p * (1 + whole),
        C=t_p * rest,
    )
    unconstrained = HyperbolaCoeffs(
        A=t_o,
        B=(w.n - 1) * t_o + t_p,
        C=(w.n - 1) * t_p,
    )
    return constrained, unconstrained


def hyperbola_minima(q: int, w: Workload, t_p: float, t_o: float) -> Tuple[float, float]:
    """Абсциссы минимумов p0 (для f_q) и p1 (для f); p0 <= p1"""
    _require_positive("t_o", t_o)
    constrained, unconstrained = hyperbola_coeffs(q, w, t_p, t_o)
    return constrained.argmin(), unconstrained.argmin()


def classify_case(q: int, w: Workload, t_p: float, t_o: float) -> str:
    """
    Положение q относительно минимумов гипербол:
    "i" при q < p0, "ii" при p0 <= q <= p1, "iii" при p1 < q
    """
    p0, p1 = hyperbola_minima(q, w, t_p, t_o)
    if q < p0:
        return "i"
    if q <= p1:
        return "ii"
    return "iii"


def _integerize(real_optimum: float, time_of: Callable[[int], float]) -> Tuple[int, float]:
    """Выбор целой глубины из {floor, ceil}; при равенстве времени берется меньшая глубина"""
    candidates = sorted({max(1, math.floor(real_optimum)), max(1, math.ceil(real_optimum))})

    best_depth, best_time = None, None
    for depth in candidates:
        value = time_of(depth)
        if best_time is None or (value < best_time and not math.isclose(value, best_time, rel_tol=config.REL_TOL)):
            best_depth, best_time = depth, value

    return best_depth, best_time


def optimal_depth_exact(q: int, w: Workload, t_p: float, t_o: float) -> DepthRecommendation:
    """
    Оптимальная глубина для точной модели:
    p_opt = max(p0, min(q, p1)), где p0, p1 - минимумы гипербол f_q и f.
    """
    _require_positive("t_o", t_o)
    _require_positive("t_p", t_p)

    p0, p1 = hyperbola_minima(q, w, t_p, t_o)
    real_optimum = max(1.0, max(p0, min(q, p1)))

    depth, time = _integerize(real_optimum, lambda p: bounded_time(PipelineConfig(p, q, t_p, t_o), w))
    return DepthRecommendation(real_optimum, depth, time, "exact")


def simplified_time(cfg: PipelineConfig, w: Workload) -> float:
    """
    Математическое ожидание времени для упрощенного конвейера
    с одним конфликтом типа (p - q)^+ + 1 вероятности 1/q.
    """
    # 1 - 1/q + ((p - q)^+ + 1)/q, записанное так, чтобы при p <= q получалась ровно 1
    per_element = 1 + positive_part(cfg.p - cfg.q) / cfg.q
    return (cfg.p + (w.n - 1) * per_element) * cycle_time(cfg)


def simplified_error_bound(cfg: PipelineConfig) -> float:
    """Строгая верхняя граница разности simplified_time - bounded_time"""
    return positive_part(cfg.p - cfg.q) * (cfg.t_o + cfg.t_p / cfg.p)


def optimal_depth_simplified(q: int, w: Workload, t_p: float, t_o: float) -> DepthRecommendation:
    _require_positive("t_o", t_o)
    if t_p < 0:
        raise ValueError(f"t_p не может быть отрицательным: {t_p}")

    real_optimum = max(1.0, min(q, math.sqrt((w.n - 1) * t_p / t_o)))

    depth, time = _integerize(real_optimum, lambda p: simplified_time(PipelineConfig(p, q, t_p, t_o), w))
    return DepthRecommendation(real_optimum, depth, time, "simplified")


def restart_time(cfg: PipelineConfig, w: Workload, r: RestartModel) -> float:
    """
    Ожидаемое время для конвейера с двумя конфликтами:
    рестарт (тип p) с вероятностью b и конфликт типа (p - q)^+ + 1 с вероятностью (1 - b)/q.
    """
    b = r.b
    # (1-b)(1-1/q) + ((p-q)^+ + 1)(1-b)/q + b p
    per_element = (1 - b) * (1 + positive_part(cfg.p - cfg.q) / cfg.q) + b * cfg.p
    return (cfg.p + (w.n - 1) * per_element) * cycle_time(cfg)


def optimal_depth_restart(q: int, w: Workload, t_p: float, t_o: float, r: RestartModel) -> DepthRecommendation:
    if w.n < 2:
        raise PreconditionError(f"Формула с рестартами требует n >= 2, получено: {w.n}")
    _require_positive("t_o", t_o)
    if t_p < 0:
        raise ValueError(f"t_p не может быть отрицательным: {t_p}")

    b = r.b
    real_optimum = max(1.0, min(q, math.sqrt((1 - b) * t_p / ((1 / (w.n - 1) + b) * t_o))))

    depth, time = _integerize(real_optimum, lambda p: restart_time(PipelineConfig(p, q, t_p, t_o), w, r))
    return DepthRecommendation(real_optimum, depth, time, "restart")


def hazard_expectation(p: int, w: Workload, probs: Sequence[float], h: float = 1.0) -> float:
    """Ожидаемое время (p + (n - 1)(b_1 + 2 b_2 + ... )) h для распределения типов конфликтов"""
    mean_cycles = sum(j * b_j for j, b_j in enumerate(probs, 1))
    return (p + (w.n - 1) * mean_cycles) * h


def generalized_amdahl(fractions: Sequence, sequential_time):
    """
    Обобщенный закон Амдала: T_q = (g_1/1 + g_2/2 + ... + g_q/q) T_1.

    Для дробей типа Fraction и целого T_1 результат точный.
    """
    if any(g < 0 for g in fractions):
        raise PreconditionError(f"Доли g_i не могут быть отрицательными: {list(fractions)}")
    total = sum(fractions)
    if abs(total - 1) > config.PROB_TOL:
        raise PreconditionError(f"Сумма долей g_i должна быть равна 1, получено: {float(total)}")

    return sum(g / level for level, g in enumerate(fractions, 1)) * sequential_time


# --- векторизованные кривые для сканирования и построения графиков ---


def bounded_time_curve(q: int, w: Workload, t_p: float, t_o: float, depths) -> np.ndarray:
    p = np.asarray(depths, dtype=np.int64)
    cycles = p + w.n - 1 + np.maximum(p - q, 0) * ((w.n - 1) // q)
    return cycles * (t_p / p + t_o)


def simplified_time_curve(q: int, w: Workload, t_p: float, t_o: float, depths) -> np.ndarray:
    p = np.asarray(depths, dtype=np.int64)
    per_element = 1 + np.maximum(p - q, 0) / q
    return (p + (w.n - 1) * per_element) * (t_p / p + t_o)


def restart_time_curve(q: int, w: Workload, t_p: float, t_o: float, r: RestartModel, depths) -> np.ndarray:
    p = np.asarray(depths, dtype=np.int64)
    b = r.b
    per_element = (1 - b) * (1 + np.maximum(p - q, 0) / q) + b * p
    return (p + (w.n - 1) * per_element) * (t_p / p + t_o)


def scan_optimal_depth(time_curve: Callable[[np.ndarray], np.ndarray], limit: int = config.DEPTH_SCAN_LIMIT) -> Tuple[int, float]:
    """
    Полный перебор p = 1..limit.

    Args:
        time_curve: функция массива глубин -> массив времен

    Returns:
        (глубина с минимальным временем, это время); при равенстве - меньшая глубина
    """
    depths = np.arange(1, limit + 1)
    times = time_curve(depths)
    best = times.min()
    index = int(np.flatnonzero(times <= best + abs(best) * config.REL_TOL)[0])
    return int(depths[index]), float(times[index])
