#!/usr/bin/env python3
"""
Тесты исполняемой модели конвейера (виртуальное и реальное время)
"""

import os
import sys
import threading

import pytest

# Добавляем src в путь
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from model import PipelineConfig, RestartModel, Workload, bounded_time, cycle_time
from pipesim import (
    ChannelSpec,
    THREAD_PREFIX,
    SimRun,
    StageInterval,
    empirical_depth_sweep,
    max_concurrency,
    run_virtual,
    run_wallclock,
    timeline_to_csv,
)
from schedule import build_table

WALLCLOCK_DEMO = os.getenv("BPL_WALLCLOCK_DEMO") == "1"


def test_virtual_examples():
    assert run_virtual(PipelineConfig.unit_cycle(4, 3), 8).total_time == 13
    assert run_virtual(PipelineConfig.unit_cycle(10, 5), 50).total_time == 104

    cfg = PipelineConfig(5, 5, 1.0, 0.3)
    assert run_virtual(cfg, 20).total_time == pytest.approx((5 + 20 - 1) * cycle_time(cfg))


@pytest.mark.parametrize("p", range(1, 9))
def test_virtual_matches_formula(p):
    for q in range(1, p + 1):
        for n in range(1, 13):
            cfg = PipelineConfig.unit_cycle(p, q)
            assert run_virtual(cfg, n).total_time == bounded_time(cfg, Workload(n)), (p, q, n)


def test_virtual_matches_reservation_table():
    for p, q, n in [(4, 3, 8), (6, 2, 9), (5, 5, 4)]:
        run = run_virtual(PipelineConfig.unit_cycle(p, q), n)
        table = build_table(p, q, n)
        for item in run.timeline:
            assert table.grid[item.stage - 1, int(item.start)] == item.element


def test_virtual_timeline_invariants():
    for p, q, n in [(4, 3, 8), (7, 3, 11), (3, 1, 5)]:
        cfg = PipelineConfig(p, q, 2.0, 0.5)
        run = run_virtual(cfg, n)
        assert run.ok
        assert run.mode == "virtual"
        assert len(run.timeline) == n * p
        assert max_concurrency(run.timeline) <= q
        assert run.exit_order == list(range(1, n + 1))

        for element in range(1, n + 1):
            intervals = sorted((i for i in run.timeline if i.element == element), key=lambda i: i.stage)
            assert [i.stage for i in intervals] == list(range(1, p + 1))
            for first, second in zip(intervals, intervals[1:]):
                assert first.end <= second.start
            assert all(i.end - i.start == pytest.approx(cycle_time(cfg)) for i in intervals)

        starts = min(i.start for i in run.timeline)
        ends = max(i.end for i in run.timeline)
        assert run.total_time == pytest.approx(ends - starts)


def test_max_concurrency_touching_intervals():
    timeline = [StageInterval(1, 1, 0.0, 1.0), StageInterval(2, 1, 1.0, 2.0), StageInterval(1, 2, 1.0, 2.0)]
    assert max_concurrency(timeline) == 2
    assert max_concurrency([]) == 0


def test_timeline_csv():
    run = run_virtual(PipelineConfig.unit_cycle(2, 1), 2)
    lines = timeline_to_csv(run).splitlines()
    assert lines[0] == "element,stage,start,end"
    assert len(lines) == 5
    assert lines[1] == "1,1,0.0,1.0"


def test_channel_spec():
    assert ChannelSpec().capacity == 1
    with pytest.raises(ValueError):
        ChannelSpec(0)


def test_virtual_wide_channels():
    for p, q, n in [(4, 3, 8), (6, 2, 9), (5, 5, 4)]:
        cfg = PipelineConfig.unit_cycle(p, q)
        run = run_virtual(cfg, n, channel=ChannelSpec(2))
        assert run.ok
        assert len(run.timeline) == n * p
        assert max_concurrency(run.timeline) <= q
        assert run.exit_order == list(range(1, n + 1))
        # не быстрее заполнения конвейера и не быстрее q операций за цикл
        assert run.total_time >= p + n - 1
        assert run.total_time >= -(-n * p // q)


def test_wallclock_wide_channels():
    cfg = PipelineConfig(3, 2, 3.0, 1.0)
    run = run_wallclock(cfg, 4, scale=0.005, timeout=30, channel=ChannelSpec(2))
    assert run.ok, run.diagnostic
    assert len(run.timeline) == 12
    assert max_concurrency(run.timeline) <= 2
    assert run.exit_order == [1, 2, 3, 4]


def test_virtual_invalid_workload():
    with pytest.raises(ValueError):
        run_virtual(PipelineConfig.unit_cycle(2, 1), 0)


def test_simrun_diagnostic():
    run = SimRun(PipelineConfig.unit_cycle(2, 1), 1, "wallclock", [], 0.0, diagnostic="таймаут")
    assert not run.ok
    assert run.exit_order == []


def test_wallclock_smoke():
    """Короткий прогон в реальном времени: ограничение q и порядок выхода"""
    cfg = PipelineConfig(3, 2, 3.0, 1.0)
    run = run_wallclock(cfg, 4, scale=0.005, timeout=30)
    assert run.ok, run.diagnostic
    assert len(run.timeline) == 12
    assert max_concurrency(run.timeline) <= 2
    assert run.exit_order == [1, 2, 3, 4]
    # ожидание не может быть короче заказанного
    assert all(i.end - i.start >= 0.99 * cycle_time(cfg) for i in run.timeline)
    assert run.total_time >= 4 * cycle_time(cfg)


def test_wallclock_single_element():
    cfg = PipelineConfig(1, 1, 5.0, 5.0)
    run = run_wallclock(cfg, 1, scale=0.002, timeout=30)
    assert run.ok
    assert run.total_time >= 0.99 * cycle_time(cfg)
    assert run.total_time <= 5 * cycle_time(cfg)


def test_wallclock_timeout_returns_partial_run():
    cfg = PipelineConfig(2, 1, 100.0, 100.0)
    run = run_wallclock(cfg, 5, scale=0.01, timeout=0.3)
    assert not run.ok
    assert "Таймаут" in run.diagnostic
    assert len(run.timeline) < 10
    # после таймаута потоки прогона уже остановлены
    assert [t.name for t in threading.enumerate() if t.name.startswith(THREAD_PREFIX)] == []


def test_wallclock_invalid_scale():
    with pytest.raises(ValueError):
        run_wallclock(PipelineConfig.unit_cycle(2, 1), 2, scale=0)


@pytest.mark.skipif(not WALLCLOCK_DEMO, reason="демонстрация в реальном времени: BPL_WALLCLOCK_DEMO=1")
def test_wallclock_demo_point():
    cfg = PipelineConfig(6, 5, 100.0, 3.0)
    run = run_wallclock(cfg, 20, scale=0.001)
    assert run.ok
    model = bounded_time(cfg, Workload(20))
    assert abs(run.total_time - model) <= 0.1 * model


@pytest.mark.skipif(not WALLCLOCK_DEMO, reason="демонстрация в реальном времени: BPL_WALLCLOCK_DEMO=1")
def test_wallclock_demo_sweep():
    result = empirical_depth_sweep(5, 20, 100.0, 3.0, range(3, 11), mode="wallclock", scale=0.001)
    assert abs(result.simulated_argmin() - 6) <= 1


def test_virtual_sweep_matches_model():
    result = empirical_depth_sweep(5, 20, 1.0, 0.3, range(1, 21), mode="virtual")
    assert len(result.rows) == 20
    for row in result.rows:
        assert row.simulated_time == pytest.approx(row.model_time, rel=1e-12)
    assert result.model_argmin() == 5
    assert result.simulated_argmin() == 5


def test_virtual_sweep_single_point():
    result = empirical_depth_sweep(3, 8, 0.0, 1.0, [4], mode="virtual")
    assert len(result.rows) == 1
    assert result.rows[0].simulated_time == 13


def test_montecarlo_sweep():
    result = empirical_depth_sweep(5, 50, 0.0, 1.0, range(4, 12), mode="montecarlo", trials=3000, seed=2)
    for row in result.rows:
        assert row.simulated_time == pytest.approx(row.model_time, rel=0.05)

    restart = empirical_depth_sweep(5, 20, 0.0, 1.0, [5], mode="montecarlo", r=RestartModel(0.1), trials=3000, seed=2)
    assert restart.rows[0].model_time == pytest.approx(31.6)
    assert restart.metadata["b"] == 0.1


def test_sweep_arguments():
    with pytest.raises(ValueError):
        empirical_depth_sweep(5, 20, 1.0, 0.3, [], mode="virtual")
    with pytest.raises(ValueError):
        empirical_depth_sweep(5, 20, 1.0, 0.3, [1, 2], mode="quantum")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
