"""
Исполняемая модель ограниченного конвейера.

Каждая ступень - отдельный процесс (поток), который читает элемент из входного
канала, занимает одно из q функциональных устройств на время цикла и пишет
результат в выходной канал. Каналы одноместные, как регистры-защелки.

Два режима:
    virtual   - дискретно-событийная модель на simpy, детерминированная
    wallclock - настоящие потоки и ожидание по таймеру, для демонстрации
"""

import csv
import io
import logging
import queue
import threading
import time
from dataclasses import dataclass
from typing import Iterable, List, Optional

import simpy
from tqdm import tqdm

import config
from hazardsim import monte_carlo_mean, restart_distribution, simplified_distribution
from model import (
    PipelineConfig,
    RestartModel,
    Workload,
    bounded_time,
    cycle_time,
    require_count,
    restart_time,
    simplified_time,
)
from sweep import SweepResult, SweepRow

logger = logging.getLogger(__name__)

MODES = ("virtual", "wallclock", "montecarlo")

THREAD_PREFIX = "pipesim-"
# запас на опрос очередей и семафора (интервал 0.05 с) при остановке
STOP_GRACE = 0.5


class SimulationError(RuntimeError):
    """Моделирование не завершилось корректно"""


@dataclass(frozen=True)
class ChannelSpec:
    capacity: int = config.CHANNEL_CAPACITY

    def __post_init__(self):
        require_count("capacity", self.capacity)


@dataclass(frozen=True)
class StageInterval:
    element: int
    stage: int
    start: float
    end: float


@dataclass
class SimRun:
    config: PipelineConfig
    n: int
    mode: str
    timeline: List[StageInterval]
    total_time: float
    diagnostic: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.diagnostic is None

    @property
    def exit_order(self) -> List[int]:
        last = [item for item in self.timeline if item.stage == self.config.p]
        return [item.element for item in sorted(last, key=lambda item: item.end)]


def max_concurrency(timeline: Iterable[StageInterval]) -> int:
    """Наибольшее число интервалов [start, end), покрывающих один момент времени"""
    events = []
    for item in timeline:
        events.append((item.start, 1))
        events.append((item.end, -1))
    # при равном времени окончание раньше начала
    events.sort(key=lambda event: (event[0], event[1]))

    active = best = 0
    for _, delta in events:
        active += delta
        best = max(best, active)
    return best


def timeline_to_csv(run: SimRun) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["element", "stage", "start", "end"])
    for item in sorted(run.timeline, key=lambda item: (item.element, item.stage)):
        writer.writerow([item.element, item.stage, item.start, item.end])
    return buffer.getvalue()


def _total_time(timeline: List[StageInterval]) -> float:
    if not timeline:
        return 0.0
    return max(item.end for item in timeline) - min(item.start for item in timeline)


@dataclass
class _Request:
    stage: int
    element: int
    grant: simpy.Event


class _VirtualPipeline:
    """
    Модель в циклах (h = 1): p процессов-ступеней, p + 1 одноместных защелок,
    источник, приемник и арбитр, который в начале каждого цикла раздает
    не более q устройств - сначала более глубоким ступеням.
    """

    def __init__(self, cfg: PipelineConfig, n: int, channel: ChannelSpec):
        self.cfg = cfg
        self.n = n
        self.env = simpy.Environment()
        self.latches = [simpy.Store(self.env, capacity=channel.capacity) for _ in range(cfg.p + 1)]
        self.pending: List[_Request] = []
        self.in_flight = 0
        self.exited: List[int] = []
        self.intervals: List[tuple] = []

    def source(self):
        for element in range(1, self.n + 1):
            yield self.latches[0].put(element)

    def stage_worker(self, stage: int):
        inbox, outbox = self.latches[stage - 1], self.latches[stage]
        for _ in range(self.n):
            element = yield inbox.get()
            grant = self.env.event()
            self.pending.append(_Request(stage, element, grant))
            yield grant

            start = self.env.now
            yield self.env.timeout(1)
            self.intervals.append((element, stage, start, self.env.now))
            self.in_flight -= 1

            yield outbox.put(element)

    def sink(self):
        for _ in range(self.n):
            element = yield self.latches[self.cfg.p].get()
            self.exited.append(element)

    def arbiter(self):
        devices = min(self.cfg.q, self.cfg.p)
        while True:
            # все события текущего момента должны отработать до раздачи устройств
            while self.env.peek() == self.env.now:
                yield self.env.timeout(0)

            if len(self.exited) == self.n:
                return
            if not self.pending and not self.in_flight:
                raise SimulationError(f"Взаимная блокировка в момент {self.env.now}: нет готовых ступеней")

            self.pending.sort(key=lambda request: (-request.stage, request.element))
            granted, self.pending = self.pending[:devices], self.pending[devices:]
            for request in granted:
                request.grant.succeed()
            self.in_flight += len(granted)
            logger.debug(f"Цикл {self.env.now + 1}: " + ", ".join(f"{r.stage}<-{r.element}" for r in granted))

            yield self.env.timeout(1)

    def run(self) -> int:
        self.env.process(self.source())
        for stage in range(1, self.cfg.p + 1):
            self.env.process(self.stage_worker(stage))
        self.env.process(self.sink())
        done = self.env.process(self.arbiter())
        self.env.run(until=done)
        return int(self.env.now)


def run_virtual(cfg: PipelineConfig, n: int, channel: ChannelSpec = ChannelSpec()) -> SimRun:
    """Детерминированное моделирование в виртуальном времени"""
    require_count("n", n)
    pipeline = _VirtualPipeline(cfg, n, channel)
    pipeline.run()

    h = cycle_time(cfg)
    timeline = [StageInterval(element, stage, start * h, end * h) for element, stage, start, end in pipeline.intervals]
    cycles = max(item[3] for item in pipeline.intervals) - min(item[2] for item in pipeline.intervals)

    logger.debug(f"Виртуальный прогон p={cfg.p}, q={cfg.q}, n={n}: {cycles} циклов")
    return SimRun(config=cfg, n=n, mode="virtual", timeline=timeline, total_time=cycles * h)


class _Stopped(Exception):
    pass


def run_wallclock(cfg: PipelineConfig, n: int, scale: float = config.WALLCLOCK_SCALE,
                  timeout: float = config.WALLCLOCK_TIMEOUT, channel: ChannelSpec = ChannelSpec()) -> SimRun:
    """
    Многопоточный конвейер: p потоков-ступеней, очереди емкости channel.capacity
    между ними и семафор на q устройств.

    Операция ступени имитируется ожиданием t_p/p, запись в защелку - ожиданием t_o
    (в секундах это умножается на scale). Времена в результате - в модельных единицах.
    При сбое потока или таймауте возвращается частичный результат с diagnostic;
    все потоки к этому моменту уже остановлены.
    """
    require_count("n", n)
    if scale <= 0:
        raise ValueError(f"Масштаб времени должен быть > 0, получено: {scale}")
    if cycle_time(cfg) * scale < 0.001:
        logger.warning(f"Цикл {cycle_time(cfg) * scale * 1000:.3f} мс меньше разрешения таймера, "
                       f"результат будет зашумлен")

    p, q = cfg.p, cfg.q
    latches = [queue.Queue(maxsize=channel.capacity) for _ in range(p + 1)]
    permits = threading.BoundedSemaphore(q)
    stop = threading.Event()
    lock = threading.Lock()
    timeline: List[StageInterval] = []
    exited: List[int] = []
    failures: List[str] = []

    operation_delay = cfg.t_p / p * scale
    latch_delay = cfg.t_o * scale
    origin = time.perf_counter()

    def take(latch):
        while not stop.is_set():
            try:
                return latch.get(timeout=0.05)
            except queue.Empty:
                continue
        raise _Stopped()

    def give(latch, item):
        while not stop.is_set():
            try:
                latch.put(item, timeout=0.05)
                return
            except queue.Full:
                continue
        raise _Stopped()

    def acquire_device():
        while not permits.acquire(timeout=0.05):
            if stop.is_set():
                raise _Stopped()
        if stop.is_set():
            permits.release()
            raise _Stopped()

    def guarded(name, body):
        def runner():
            try:
                body()
            except _Stopped:
                pass
            except Exception as e:
                with lock:
                    failures.append(f"{name}: {e}")
                stop.set()
        return threading.Thread(target=runner, name=f"{THREAD_PREFIX}{name}", daemon=True)

    def source():
        for element in range(1, n + 1):
            give(latches[0], element)

    def stage_worker(stage):
        def body():
            for _ in range(n):
                element = take(latches[stage - 1])
                acquire_device()
                try:
                    start = time.perf_counter()
                    time.sleep(operation_delay)
                    time.sleep(latch_delay)
                    end = time.perf_counter()
                finally:
                    permits.release()
                with lock:
                    if stop.is_set():
                        raise _Stopped()
                    timeline.append(StageInterval(element, stage, (start - origin) / scale, (end - origin) / scale))
                # запись в следующую защелку - уже без устройства, иначе возможна взаимная блокировка
                give(latches[stage], element)
        return body

    def sink():
        for _ in range(n):
            exited.append(take(latches[p]))

    threads = [guarded("source", source), guarded("sink", sink)]
    threads += [guarded(f"stage-{stage}", stage_worker(stage)) for stage in range(1, p + 1)]
    for thread in threads:
        thread.start()

    deadline = time.perf_counter() + timeout
    for thread in threads:
        thread.join(max(0.0, deadline - time.perf_counter()))

    diagnostic = None
    if any(thread.is_alive() for thread in threads):
        stop.set()
        diagnostic = f"Таймаут {timeout} с: завершено {len(exited)} из {n} элементов"
    elif failures:
        diagnostic = "Сбой потоков: " + "; ".join(failures)

    # после stop каждый поток доспит не больше одного цикла и выйдет на ближайшей проверке
    grace = time.perf_counter() + operation_delay + latch_delay + STOP_GRACE
    for thread in threads:
        thread.join(max(0.0, grace - time.perf_counter()))
    stuck = [thread.name for thread in threads if thread.is_alive()]
    if stuck:
        diagnostic = (diagnostic or "") + f"; не остановились потоки: {', '.join(stuck)}"

    with lock:
        snapshot = list(timeline)

    if diagnostic is None and max_concurrency(snapshot) > q:
        diagnostic = f"Нарушено ограничение: активно {max_concurrency(snapshot)} ступеней при q={q}"

    if diagnostic:
        logger.warning(diagnostic)

    run = SimRun(config=cfg, n=n, mode="wallclock", timeline=snapshot, total_time=_total_time(snapshot), diagnostic=diagnostic)
    logger.info(f"Прогон в реальном времени p={p}, q={q}, n={n}: {run.total_time:.2f} ед. "
                f"(модель {bounded_time(cfg, Workload(n)):.2f})")
    return run


def empirical_depth_sweep(q: int, n: int, t_p: float, t_o: float, depths: Iterable[int], mode: str = "virtual",
                          r: Optional[RestartModel] = None, trials: int = config.MONTE_CARLO_TRIALS,
                          seed: int = config.DEFAULT_SEED, scale: float = config.WALLCLOCK_SCALE,
                          progress: bool = False) -> SweepResult:
    """
    Прогон по глубинам: (p, измеренное время, время по модели).

    virtual и wallclock сравниваются с точной моделью, montecarlo - с упрощенной
    моделью (или с моделью рестартов, если задана r).
    """
    if mode not in MODES:
        raise ValueError(f"Неизвестный режим: {mode!r} (доступны: {', '.join(MODES)})")
    depths = list(depths)
    if not depths:
        raise ValueError("Пустой диапазон глубин")
    w = Workload(n)

    rows = []
    for p in tqdm(depths, desc=f"Глубины ({mode})", disable=not progress):
        cfg = PipelineConfig(p, q, t_p, t_o)

        if mode == "virtual":
            model_time = bounded_time(cfg, w)
            measured = run_virtual(cfg, n).total_time
        elif mode == "wallclock":
            model_time = bounded_time(cfg, w)
            run = run_wallclock(cfg, n, scale=scale)
            if not run.ok:
                raise SimulationError(run.diagnostic)
            measured = run.total_time
        else:
            if r is None:
                model_time = simplified_time(cfg, w)
                distribution = simplified_distribution(p, q)
            else:
                model_time = restart_time(cfg, w, r)
                distribution = restart_distribution(p, q, r)
            stats = monte_carlo_mean(p, distribution, n, trials, seed)
            measured = stats.mean * cycle_time(cfg)

        rows.append(SweepRow(depth=p, model_time=model_time, simulated_time=measured, label=mode))

    metadata = {"q": q, "n": n, "t_p": t_p, "t_o": t_o, "mode": mode, "b": r.b if r else None}
    return SweepResult(rows=rows, metadata=metadata)
