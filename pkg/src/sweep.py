"""
Серии (глубина, время) для кривых T(p) и их сохранение в CSV / JSON / SVG.
"""

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import config
from model import (
    RestartModel,
    Workload,
    bounded_time_curve,
    restart_time_curve,
    simplified_time_curve,
)

logger = logging.getLogger(__name__)

CSV_FIELDS = ["depth", "model_time", "simulated_time", "label"]
OUTPUT_FORMATS = ("csv", "json", "svg")
MODELS = ("exact", "simplified", "restart")


@dataclass(frozen=True)
class SweepRow:
    depth: int
    model_time: float
    simulated_time: Optional[float] = None
    label: str = ""


@dataclass
class SweepResult:
    rows: List[SweepRow]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        depths = [row.depth for row in self.rows]
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError(f"Глубины в серии должны строго возрастать: {depths}")
        for row in self.rows:
            if row.model_time < 0 or (row.simulated_time is not None and row.simulated_time < 0):
                raise ValueError(f"Отрицательное время в строке {row}")

    @property
    def depths(self) -> np.ndarray:
        return np.array([row.depth for row in self.rows])

    @property
    def model_times(self) -> np.ndarray:
        return np.array([row.model_time for row in self.rows])

    def has_simulation(self) -> bool:
        return any(row.simulated_time is not None for row in self.rows)

    def model_argmin(self) -> int:
        return int(self.depths[int(np.argmin(self.model_times))])

    def simulated_argmin(self) -> Optional[int]:
        measured = [row for row in self.rows if row.simulated_time is not None]
        if not measured:
            return None
        return min(measured, key=lambda row: (row.simulated_time, row.depth)).depth

    def to_dict(self) -> Dict[str, Any]:
        return {"metadata": self.metadata, "rows": [asdict(row) for row in self.rows]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepResult":
        return cls(rows=[SweepRow(**row) for row in data["rows"]], metadata=data.get("metadata", {}))


def model_curve(q: int, w: Workload, t_p: float, t_o: float, depths, model: str = "exact", r: Optional[RestartModel] = None) -> np.ndarray:
    """Значения выбранной аналитической модели на массиве глубин"""
    if model == "exact":
        return bounded_time_curve(q, w, t_p, t_o, depths)
    if model == "simplified":
        return simplified_time_curve(q, w, t_p, t_o, depths)
    if model == "restart":
        if r is None:
            raise ValueError("Для модели restart нужна вероятность рестарта b")
        return restart_time_curve(q, w, t_p, t_o, r, depths)
    raise ValueError(f"Неизвестная модель: {model!r} (доступны: {', '.join(MODELS)})")


def model_sweep(q: int, w: Workload, t_p: float, t_o: float, depths: Iterable[int],
                model: str = "exact", r: Optional[RestartModel] = None) -> SweepResult:
    depths = list(depths)
    if not depths:
        raise ValueError("Пустой диапазон глубин")
    times = model_curve(q, w, t_p, t_o, depths, model, r)
    rows = [SweepRow(depth=int(p), model_time=float(t), label=model) for p, t in zip(depths, times)]
    metadata = {"q": q, "n": w.n, "t_p": t_p, "t_o": t_o, "model": model, "b": r.b if r else None}
    return SweepResult(rows=rows, metadata=metadata)


def write_csv(result: SweepResult, path: str):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in result.rows:
            record = asdict(row)
            if record["simulated_time"] is None:
                record["simulated_time"] = ""
            writer.writerow(record)


def read_csv(path: str) -> List[SweepRow]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [
            SweepRow(
                depth=int(record["depth"]),
                model_time=float(record["model_time"]),
                simulated_time=float(record["simulated_time"]) if record["simulated_time"] else None,
                label=record["label"],
            )
            for record in csv.DictReader(f)
        ]


def write_json(result: SweepResult, path: str):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(result.to_dict(), f, ensure_ascii=False, indent=2)


def load_json(path: str) -> SweepResult:
    with open(path, "r", encoding="utf-8") as f:
        return SweepResult.from_dict(json.load(f))


def write_svg(result: SweepResult, path: str, unit: str = "ед. времени"):
    """Кривая модели линией, результаты моделирования - небольшими кружками"""
    width, height = config.SVG_SIZE_PT
    # matplotlib пишет размеры SVG в пунктах, 72 на дюйм
    fig, ax = plt.subplots(figsize=(width / 72, height / 72))

    ax.plot(result.depths, result.model_times, "k-", linewidth=1.5, label="модель")

    measured = [row for row in result.rows if row.simulated_time is not None]
    if measured:
        ax.plot([row.depth for row in measured], [row.simulated_time for row in measured],
                "o", markersize=5, fillstyle="none", label="моделирование")

    q = result.metadata.get("q")
    if q is not None:
        ax.axvline(q, color="grey", linestyle="--", linewidth=0.8, label=f"q = {q}")

    ax.set_xlabel("число ступеней p")
    ax.set_ylabel(f"время обработки ({unit})")
    meta = result.metadata
    ax.set_title(f"n = {meta.get('n')}, q = {q}, t_p = {meta.get('t_p')}, t_o = {meta.get('t_o')}")
    ax.grid(True, linewidth=0.3)
    ax.legend()

    fig.savefig(path, format="svg")
    plt.close(fig)


def save_sweep(result: SweepResult, output_dir: str, stem: str, formats: Iterable[str], unit: str = "ед. времени") -> List[str]:
    """Сохранение серии во все запрошенные форматы; возвращает пути файлов"""
    os.makedirs(output_dir, exist_ok=True)
    paths = []
    for fmt in formats:
        path = os.path.join(output_dir, f"{stem}.{fmt}")
        if fmt == "csv":
            write_csv(result, path)
        elif fmt == "json":
            write_json(result, path)
        elif fmt == "svg":
            write_svg(result, path, unit)
        else:
            raise ValueError(f"Неизвестный формат вывода: {fmt!r} (доступны: {', '.join(OUTPUT_FORMATS)})")
        logger.info(f"Серия сохранена: {path}")
        paths.append(path)
    return paths
