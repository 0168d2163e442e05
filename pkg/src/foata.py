"""
Моделирование ограниченного конвейера через трассы.

Программа раскладывается в последовательность однотактных операций (элемент, ступень).
Две операции независимы, если у них разные элементы и разные ступени; независимые
соседние операции можно переставлять. Жадная нормальная форма Фоаты с ограничением
cap на размер блока дает число тактов работы конвейера (высоту формы).
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

from model import require_count


@dataclass(frozen=True, order=True)
class Op:
    element: int
    stage: int

    def __str__(self):
        return f"({self.element},{self.stage})"


@dataclass(frozen=True)
class Trace:
    ops: Tuple[Op, ...]

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)


@dataclass(frozen=True)
class FoataForm:
    blocks: Tuple[Tuple[Op, ...], ...]
    cap: int

    def flatten(self) -> Trace:
        return Trace(tuple(op for block in self.blocks for op in block))


def pipeline_trace(p: int, n: int) -> Trace:
    """Каноническая последовательная запись: (1,1), (1,2), ..., (1,p), (2,1), ..."""
    require_count("p", p)
    require_count("n", n)
    return Trace(tuple(Op(element, stage) for element in range(1, n + 1) for stage in range(1, p + 1)))


def independent(a: Op, b: Op) -> bool:
    """Один элемент - зависимость по данным, одна ступень - структурная зависимость"""
    return a.element != b.element and a.stage != b.stage


def _predecessors(trace: Trace) -> List[Tuple[int, int]]:
    """
    Для каждой операции - индексы ближайших предыдущих операций
    с тем же элементом и с той же ступенью (-1, если их нет).
    """
    last_by_element: Dict[int, int] = {}
    last_by_stage: Dict[int, int] = {}
    result = []
    for index, op in enumerate(trace.ops):
        result.append((last_by_element.get(op.element, -1), last_by_stage.get(op.stage, -1)))
        last_by_element[op.element] = index
        last_by_stage[op.stage] = index
    return result


def foata_normal_form(trace: Trace, cap: int) -> FoataForm:
    """
    Жадное построение блоков слева направо.

    Операция готова, если все зависимые от нее предыдущие операции трассы уже
    попали в более ранние блоки. Зависимые операции одного элемента или одной
    ступени образуют цепочку, поэтому достаточно проверить ближайших предшественников.
    Готовые операции попарно независимы; в блок берется не более cap из них:
    сначала более глубокие ступени, затем меньшие номера элементов.
    """
    require_count("cap", cap)
    predecessors = _predecessors(trace)
    placed = [False] * len(trace.ops)
    remaining = list(range(len(trace.ops)))
    blocks = []

    while remaining:
        ready = [
            index for index in remaining
            if all(pred < 0 or placed[pred] for pred in predecessors[index])
        ]
        ready.sort(key=lambda index: (-trace.ops[index].stage, trace.ops[index].element))
        chosen = ready[:cap]

        for index in chosen:
            placed[index] = True
        chosen_set = set(chosen)
        remaining = [index for index in remaining if index not in chosen_set]
        blocks.append(tuple(trace.ops[index] for index in chosen))

    return FoataForm(blocks=tuple(blocks), cap=cap)


def height(form: FoataForm) -> int:
    """Высота нормальной формы - число блоков"""
    return len(form.blocks)


def is_equivalent(u: Trace, v: Trace) -> bool:
    """
    Эквивалентность трасс с однократными операциями: одинаковый набор операций
    и одинаковый взаимный порядок каждой пары зависимых операций.
    """
    if sorted(u.ops) != sorted(v.ops):
        return False
    position = {op: index for index, op in enumerate(v.ops)}
    ops = u.ops
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            if not independent(ops[i], ops[j]) and position[ops[i]] > position[ops[j]]:
                return False
    return True


def format_form(form: FoataForm) -> str:
    """Строки вида `1: (1,1)`, `2: (1,2) (2,1)`, ..."""
    lines = [f"{index}: " + " ".join(str(op) for op in block) for index, block in enumerate(form.blocks, 1)]
    return "\n".join(lines) + "\n"
