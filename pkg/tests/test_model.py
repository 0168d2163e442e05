#!/usr/bin/env python3
"""
Тесты аналитических моделей ограниченного конвейера
"""

import math
import os
import sys
from fractions import Fraction

import numpy as np
import pytest

# Добавляем src в путь
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from model import (
    HyperbolaCoeffs,
    PipelineConfig,
    PreconditionError,
    RestartModel,
    Workload,
    bounded_cycles,
    bounded_time,
    bounded_time_curve,
    classify_case,
    cycle_time,
    generalized_amdahl,
    hazard_expectation,
    hyperbola_coeffs,
    hyperbola_minima,
    optimal_depth_exact,
    optimal_depth_restart,
    optimal_depth_simplified,
    restart_time,
    restart_time_curve,
    scan_optimal_depth,
    simplified_error_bound,
    simplified_time,
    simplified_time_curve,
)

DELAYS = [(1.0, 0.02), (10.0, 0.3), (100.0, 3.0), (0.5, 0.5), (1.0, 0.001)]
GRID_DELAYS = [(t_p, t_o) for t_p in (1.0, 10.0) for t_o in (0.02, 0.3, 1.0)]


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(0, 1, 1.0, 1.0)
    with pytest.raises(ValueError):
        PipelineConfig(1, 0, 1.0, 1.0)
    with pytest.raises(ValueError):
        PipelineConfig(2, 2, -1.0, 1.0)
    with pytest.raises(ValueError):
        PipelineConfig(2, 2, 0.0, 0.0)
    with pytest.raises(ValueError):
        PipelineConfig(2.5, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        Workload(0)
    with pytest.raises(ValueError):
        RestartModel(1.5)


def test_cycle_time():
    cfg = PipelineConfig(5, 5, 1.0, 0.3)
    assert cycle_time(cfg) == pytest.approx(0.5)
    assert cfg.h == cycle_time(cfg)
    assert cycle_time(PipelineConfig.unit_cycle(7, 3)) == 1.0
    assert cfg.with_depth(10).p == 10


def test_bounded_time_examples():
    """Таблица занятости 4 x 3 x 8 и производные примеры"""
    assert bounded_time(PipelineConfig.unit_cycle(4, 3), Workload(8)) == 13
    assert bounded_time(PipelineConfig.unit_cycle(10, 5), Workload(50)) == 104
    assert bounded_time(PipelineConfig(5, 5, 1.0, 0.3), Workload(20)) == pytest.approx(12.0)
    assert bounded_time(PipelineConfig.unit_cycle(6, 2), Workload(1)) == 6


def test_unbounded_case_is_classic_pipeline():
    for p in range(1, 8):
        for n in range(1, 15):
            for q in range(p, p + 3):
                assert bounded_cycles(p, q, n) == p + n - 1


def test_single_device_is_sequential():
    for p in range(1, 8):
        for n in range(1, 15):
            assert bounded_cycles(p, 1, n) == n * p


def test_bounded_time_monotone_in_n():
    for p in range(1, 9):
        for q in range(1, 9):
            times = [bounded_cycles(p, q, n) for n in range(1, 40)]
            assert all(b > a for a, b in zip(times, times[1:]))


def test_hyperbolas_match_bounded_time():
    """T_q(x, n) совпадает с f_q при x >= q и с f при x < q"""
    q, w = 5, Workload(20)
    t_p, t_o = 1.0, 0.3
    constrained, unconstrained = hyperbola_coeffs(q, w, t_p, t_o)
    for p in range(1, 30):
        expected = bounded_time(PipelineConfig(p, q, t_p, t_o), w)
        f = constrained if p >= q else unconstrained
        assert f.value(p) == pytest.approx(expected)
        # T_q - максимум из двух гипербол
        assert max(constrained.value(p), unconstrained.value(p)) == pytest.approx(expected)


def test_hyperbola_argmin():
    assert HyperbolaCoeffs(1.0, 0.0, 4.0).argmin() == pytest.approx(2.0)
    assert HyperbolaCoeffs(0.0, 1.0, 4.0).argmin() is None


def test_hyperbola_coeffs_example():
    constrained, _ = hyperbola_coeffs(3, Workload(8), 0.0, 1.0)
    assert (constrained.A, constrained.B, constrained.C) == (3.0, 1.0, 0.0)


def test_hyperbolas_coincide_when_q_covers_workload():
    for n in range(1, 12):
        for q in range(n, n + 4):
            for t_p, t_o in DELAYS:
                constrained, unconstrained = hyperbola_coeffs(q, Workload(n), t_p, t_o)
                assert constrained.A == pytest.approx(unconstrained.A)
                assert constrained.B == pytest.approx(unconstrained.B)
                assert constrained.C == pytest.approx(unconstrained.C)


def test_minimum_position_cases():
    # минимум в q
    w = Workload(20)
    assert classify_case(5, w, 1.0, 0.3) == "ii"
    assert optimal_depth_exact(5, w, 1.0, 0.3).integer_optimum == 5

    # минимум правее q
    p0, _ = hyperbola_minima(5, Workload(50), 1.0, 0.001)
    assert p0 == pytest.approx(20.0)
    assert classify_case(5, Workload(50), 1.0, 0.001) == "i"

    # минимум левее q
    _, p1 = hyperbola_minima(12, Workload(50), 0.5, 0.5)
    assert p1 == pytest.approx(7.0)
    assert classify_case(12, Workload(50), 0.5, 0.5) == "iii"
    assert optimal_depth_exact(12, Workload(50), 0.5, 0.5).integer_optimum == 7


def test_hyperbola_minima_ordered():
    for q in range(1, 10):
        for n in range(1, 60):
            for t_p, t_o in DELAYS:
                p0, p1 = hyperbola_minima(q, Workload(n), t_p, t_o)
                assert p0 <= p1 + 1e-12


def test_optimal_depth_n150():
    """
    Вещественный оптимум 26.458; T(26) чуть меньше T(27),
    поэтому целочисленный минимум - 26, а округление вверх дает 27.
    """
    w = Workload(150)
    rec = optimal_depth_exact(15, w, 10.0, 0.02)
    assert rec.real_optimum == pytest.approx(math.sqrt(700), rel=1e-9)
    assert math.ceil(rec.real_optimum) == 27
    assert rec.integer_optimum == 26
    assert bounded_time(PipelineConfig(26, 15, 10.0, 0.02), w) < bounded_time(PipelineConfig(27, 15, 10.0, 0.02), w)
    assert rec.predicted_time == pytest.approx(bounded_time(PipelineConfig(26, 15, 10.0, 0.02), w))


def test_optimal_depth_n151():
    rec = optimal_depth_exact(15, Workload(151), 10.0, 0.02)
    assert rec.integer_optimum == 15
    assert rec.real_optimum == pytest.approx(15.0)


def test_optimal_depth_multithreaded_parameters():
    rec = optimal_depth_exact(5, Workload(20), 100.0, 3.0)
    assert 5.7 <= rec.real_optimum <= 5.9
    assert rec.integer_optimum == 6


def test_optimal_depth_preconditions():
    with pytest.raises(PreconditionError):
        optimal_depth_exact(5, Workload(20), 1.0, 0.0)
    with pytest.raises(PreconditionError):
        optimal_depth_exact(5, Workload(20), 0.0, 1.0)
    with pytest.raises(PreconditionError):
        optimal_depth_simplified(5, Workload(20), 1.0, 0.0)
    with pytest.raises(PreconditionError):
        optimal_depth_restart(5, Workload(1), 1.0, 1.0, RestartModel(0.1))


@pytest.mark.parametrize("q", range(1, 9))
def test_optimal_depth_exact_matches_scan(q):
    limit = max(200, 4 * q)
    for n in range(1, 31):
        w = Workload(n)
        for t_p, t_o in DELAYS:
            rec = optimal_depth_exact(q, w, t_p, t_o)
            depth, time = scan_optimal_depth(lambda d: bounded_time_curve(q, w, t_p, t_o, d), limit)
            assert rec.integer_optimum == depth, (q, n, t_p, t_o)
            assert rec.predicted_time == pytest.approx(time)


@pytest.mark.parametrize("q", range(2, 11))
def test_optimal_depths_match_scan_on_grid(q):
    for n in range(2, 61):
        w = Workload(n)
        for t_p, t_o in GRID_DELAYS:
            depth, _ = scan_optimal_depth(lambda d: bounded_time_curve(q, w, t_p, t_o, d), 200)
            assert optimal_depth_exact(q, w, t_p, t_o).integer_optimum == depth, (q, n, t_p, t_o)
            for b in (0.0, 0.05, 0.3):
                r = RestartModel(b)
                depth, _ = scan_optimal_depth(lambda d: restart_time_curve(q, w, t_p, t_o, r, d), 200)
                assert optimal_depth_restart(q, w, t_p, t_o, r).integer_optimum == depth, (q, n, t_p, t_o, b)


def test_simplified_time_examples():
    cfg = PipelineConfig.unit_cycle(10, 5)
    w = Workload(50)
    assert simplified_time(cfg, w) == pytest.approx(108)
    assert simplified_error_bound(cfg) == pytest.approx(5)


def test_simplified_sandwich():
    """bounded <= simplified < bounded + (p - q) h при p > q, при p <= q модели совпадают"""
    for p in range(1, 12):
        for q in range(1, 12):
            for n in range(1, 25):
                for t_p, t_o in DELAYS[:3]:
                    cfg = PipelineConfig(p, q, t_p, t_o)
                    w = Workload(n)
                    exact = bounded_time(cfg, w)
                    approx = simplified_time(cfg, w)
                    assert exact <= approx + 1e-9
                    if p <= q:
                        assert approx == pytest.approx(exact)
                    else:
                        assert approx - exact < simplified_error_bound(cfg)


@pytest.mark.parametrize("q", range(2, 11))
def test_simplified_sandwich_on_grid(q):
    depths = np.arange(1, 61)
    for n in range(2, 61):
        w = Workload(n)
        for t_p, t_o in GRID_DELAYS:
            exact = bounded_time_curve(q, w, t_p, t_o, depths)
            approx = simplified_time_curve(q, w, t_p, t_o, depths)
            bound = np.maximum(depths - q, 0) * (t_p / depths + t_o)
            gap = approx - exact

            assert np.all(gap >= -1e-9), (q, n, t_p, t_o)
            assert np.allclose(gap[depths <= q], 0.0, atol=1e-9), (q, n, t_p, t_o)
            assert np.all(gap[depths > q] < bound[depths > q]), (q, n, t_p, t_o)


@pytest.mark.parametrize("q", range(1, 9))
def test_optimal_depth_simplified_matches_scan(q):
    limit = max(200, 4 * q)
    for n in range(1, 31):
        w = Workload(n)
        for t_p, t_o in DELAYS + [(0.0, 1.0)]:
            rec = optimal_depth_simplified(q, w, t_p, t_o)
            depth, _ = scan_optimal_depth(lambda d: simplified_time_curve(q, w, t_p, t_o, d), limit)
            assert rec.integer_optimum == depth, (q, n, t_p, t_o)


def test_optimal_depth_simplified_example():
    rec = optimal_depth_simplified(5, Workload(20), 100.0, 3.0)
    assert rec.integer_optimum == 5
    assert rec.model == "simplified"


def test_restart_time_example():
    cfg = PipelineConfig.unit_cycle(5, 5)
    assert restart_time(cfg, Workload(20), RestartModel(0.1)) == pytest.approx(31.6)


def test_restart_without_restarts_is_simplified():
    for p in range(1, 10):
        for q in range(1, 10):
            cfg = PipelineConfig(p, q, 3.0, 0.5)
            assert restart_time(cfg, Workload(17), RestartModel(0.0)) == pytest.approx(simplified_time(cfg, Workload(17)))


@pytest.mark.parametrize("b", [0.0, 0.01, 0.1, 0.5, 1.0])
def test_optimal_depth_restart_matches_scan(b):
    r = RestartModel(b)
    for q in (1, 3, 5, 8):
        limit = max(200, 4 * q)
        for n in (2, 5, 20, 50):
            w = Workload(n)
            for t_p, t_o in DELAYS:
                rec = optimal_depth_restart(q, w, t_p, t_o, r)
                depth, _ = scan_optimal_depth(lambda d: restart_time_curve(q, w, t_p, t_o, r, d), limit)
                assert rec.integer_optimum == depth, (b, q, n, t_p, t_o)


def test_hazard_expectation_generalizes_simplified():
    p, q, n = 10, 5, 50
    probs = [0.0] * p
    probs[0] = 1 - 1 / q
    probs[p - q] = 1 / q
    assert hazard_expectation(p, Workload(n), probs) == pytest.approx(108)
    assert hazard_expectation(p, Workload(n), probs, h=0.5) == pytest.approx(54)


def test_generalized_amdahl():
    fractions = (Fraction(2, 32), Fraction(6, 32), Fraction(24, 32))
    assert generalized_amdahl(fractions, 32) == 13
    assert generalized_amdahl([Fraction(1)], 7) == 7

    with pytest.raises(PreconditionError):
        generalized_amdahl([Fraction(1, 2), Fraction(1, 4)], 10)
    with pytest.raises(PreconditionError):
        generalized_amdahl([Fraction(3, 2), Fraction(-1, 2)], 10)


def test_curves_match_scalar_models():
    q, w, t_p, t_o = 4, Workload(23), 7.0, 0.4
    r = RestartModel(0.2)
    depths = list(range(1, 25))
    exact = bounded_time_curve(q, w, t_p, t_o, depths)
    approx = simplified_time_curve(q, w, t_p, t_o, depths)
    restart = restart_time_curve(q, w, t_p, t_o, r, depths)
    for index, p in enumerate(depths):
        cfg = PipelineConfig(p, q, t_p, t_o)
        assert exact[index] == pytest.approx(bounded_time(cfg, w))
        assert approx[index] == pytest.approx(simplified_time(cfg, w))
        assert restart[index] == pytest.approx(restart_time(cfg, w, r))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
