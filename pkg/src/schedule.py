"""
Потактовая таблица занятости (reservation table) ограниченного конвейера.

Элемент a[i, j] = k тогда и только тогда, когда i-я ступень обрабатывает
k-й входной элемент в такте j. Используется как переборный эталон для
формул модуля model и как источник долей g_i для обобщенного закона Амдала.
"""

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from model import require_count

FORMATS = ("text", "csv")


@dataclass(frozen=True)
class ReservationTable:
    """
    depth x cycles матрица номеров элементов, 0 - ступень простаивает.
    Столбец j матрицы соответствует такту j + 1.
    """

    depth: int
    devices: int
    grid: np.ndarray

    @property
    def cycles(self) -> int:
        return self.grid.shape[1]

    @property
    def elements(self) -> int:
        return int(self.grid.max()) if self.grid.size else 0

    def column(self, cycle: int) -> dict:
        """Назначения такта cycle (нумерация с 1): ступень -> элемент"""
        values = self.grid[:, cycle - 1]
        return {stage: int(element) for stage, element in enumerate(values, 1) if element}


@dataclass(frozen=True)
class ActivityProfile:
    """
    Доли g_1..g_q: slots[i-1] - число занятых клеток в тактах,
    где активно ровно i ступеней; total = n p.
    """

    slots: Tuple[int, ...]
    total: int

    @property
    def fractions(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(s, self.total) for s in self.slots)

    def labels(self) -> List[str]:
        return [f"{s}/{self.total}" for s in self.slots]


def build_table(p: int, q: int, n: int) -> ReservationTable:
    """
    Жадное потактовое расписание.

    В каждом такте готовы пары (элемент, ступень), у которых элемент уже прошел
    предыдущую ступень, а предыдущий элемент уже прошел эту ступень.
    Запускается не более q пар: сначала более глубокие ступени, затем меньшие номера
    элементов; новый элемент попадает на первую ступень, только если осталось устройство.
    """
    require_count("p", p)
    require_count("q", q)
    require_count("n", n)
    devices = min(q, p)

    # next_stage[e] - номер следующей ступени элемента e (p + 1 - элемент вышел)
    next_stage = [0] + [1] * n
    columns = []

    while next_stage[n] <= p:
        ready = []
        for element in range(1, n + 1):
            stage = next_stage[element]
            if stage > p:
                continue
            # предыдущий элемент должен пройти ступень stage в одном из прошлых тактов
            if element > 1 and next_stage[element - 1] <= stage:
                continue
            ready.append((stage, element))

        ready.sort(key=lambda pair: (-pair[0], pair[1]))
        column = np.zeros(p, dtype=np.int64)
        for stage, element in ready[:devices]:
            column[stage - 1] = element
        for stage, element in ready[:devices]:
            next_stage[element] = stage + 1
        columns.append(column)

    grid = np.column_stack(columns)
    grid.flags.writeable = False
    return ReservationTable(depth=p, devices=devices, grid=grid)


def completion_cycles(table: ReservationTable) -> int:
    """Номер последнего непустого такта"""
    busy = np.flatnonzero(table.grid.any(axis=0))
    return int(busy[-1]) + 1


def active_stages(table: ReservationTable) -> np.ndarray:
    """Число активных ступеней в каждом такте"""
    return np.count_nonzero(table.grid, axis=0)


def max_concurrency(table: ReservationTable) -> int:
    return int(active_stages(table).max())


def concurrency_fractions(table: ReservationTable) -> ActivityProfile:
    active = active_stages(table)
    total = int(active.sum())
    slots = tuple(level * int(np.count_nonzero(active == level)) for level in range(1, table.devices + 1))
    return ActivityProfile(slots=slots, total=total)


def element_exit_order(table: ReservationTable) -> List[int]:
    """Порядок, в котором элементы покидают последнюю ступень"""
    last = table.grid[table.depth - 1]
    return [int(element) for element in last if element]


def _cell_width(table: ReservationTable) -> int:
    return max(2, len(str(table.cycles)), len(str(table.elements)))


def render_table(table: ReservationTable, fmt: str = "text") -> str:
    """
    Отрисовка таблицы: строки - ступени, столбцы - такты, пусто - простой.

    text: заголовок с номерами тактов ("01", "02", ...), как в классической записи.
    csv: заголовок "stage,1,2,...", по строке на ступень, пустые ячейки для простоя.
    """
    if fmt == "text":
        width = _cell_width(table)
        header = f"{'stage':>5}|" + "".join(f" {cycle:0{width}d}" for cycle in range(1, table.cycles + 1))
        lines = [header]
        for stage, row in enumerate(table.grid, 1):
            cells = "".join(f" {str(element) if element else '':>{width}}" for element in row)
            lines.append(f"{stage:>5}|{cells}".rstrip())
        return "\n".join(lines) + "\n"

    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["stage"] + list(range(1, table.cycles + 1)))
        for stage, row in enumerate(table.grid, 1):
            writer.writerow([stage] + [int(element) if element else "" for element in row])
        return buffer.getvalue()

    raise ValueError(f"Неизвестный формат таблицы: {fmt!r} (доступны: {', '.join(FORMATS)})")


def parse_table(rendering: str, fmt: str = "text") -> np.ndarray:
    """Обратное преобразование для render_table: возвращает матрицу ступени x такты"""
    if fmt == "text":
        lines = rendering.splitlines()
        header = lines[0].split("|", 1)[1]
        cycles = len(header.split())
        width = len(header) // cycles - 1
        rows = []
        for line in lines[1:]:
            body = line.split("|", 1)[1].ljust(cycles * (width + 1))
            cells = [body[i * (width + 1):(i + 1) * (width + 1)].strip() for i in range(cycles)]
            rows.append([int(cell) if cell else 0 for cell in cells])
        return np.array(rows, dtype=np.int64)

    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(rendering)))
        return np.array([[int(cell) if cell else 0 for cell in row[1:]] for row in rows[1:]], dtype=np.int64)

    raise ValueError(f"Неизвестный формат таблицы: {fmt!r} (доступны: {', '.join(FORMATS)})")
