"""Reference values printed for the K=2, L=2 worked example, and a comparator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import TransitionModel
from .metrics import MetricsReport

MATRIX = np.array([
    [0.0356, 0.0237, 0.0471, 0.0318, 0.0212, 0.0421, 0.2674, 0.1779, 0.3533],
    [0.0851, 0, 0, 0.0972, 0, 0, 0.8177, 0, 0],
    [0, 0.0851, 0, 0, 0.0972, 0, 0, 0.8177, 0],
    [0.2737, 0.2427, 0.4836, 0, 0, 0, 0, 0, 0],
    [0, 0.1358, 0.3604, 0.0429, 0, 0, 0.4609, 0, 0],
    [0, 0, 0.4963, 0, 0.0429, 0, 0, 0.4609, 0],
    [0, 0, 0, 0.2737, 0.2427, 0.4836, 0, 0, 0],
    [0, 0, 0, 0, 0.1358, 0.3604, 0.5037, 0, 0],
    [0, 0, 0, 0, 0, 0.4963, 0, 0.5037, 0],
])
PI = np.array([0.0220, 0.0434, 0.1587, 0.0640, 0.1022, 0.1811, 0.1998, 0.2210, 0.0078])
SELECTION = np.array([
    [0, 0], [0, 1], [0, 1], [1, 0], [0.4963, 0.5037],
    [0.4963, 0.5037], [1, 0], [0.4963, 0.5037], [0.4963, 0.5037],
])
STATE_COP = np.array([0, 0.0545, 0.0545, 0.0553, 0.0030, 0.0030, 0.0553, 0.0030, 0.0030])
EOP = 0.0220
COP = 0.0271
PT = np.array([0.5179, 0.4601])
ATD = np.array([1.9309, 2.1734])

TOL = 1e-3
ATD_TOL = 5e-3


@dataclass(frozen=True)
class Cell:
    name: str
    computed: float
    expected: float
    tol: float

    @property
    def error(self) -> float:
        return abs(self.computed - self.expected)

    @property
    def ok(self) -> bool:
        return self.error <= self.tol


def matrix_cells(model: TransitionModel) -> list[Cell]:
    A = model.matrix
    return [Cell(f"A[s{r + 1},s{c + 1}]", float(A[r, c]), float(MATRIX[r, c]), TOL)
            for r in range(9) for c in range(9)]


def table_cells(model: TransitionModel, report: MetricsReport) -> list[Cell]:
    cells = [Cell(f"pi[s{n + 1}]", float(report.pi[n]), float(PI[n]), TOL) for n in range(9)]
    for n in range(9):
        for i in range(2):
            cells.append(Cell(f"p_{i + 1}[s{n + 1}]", float(model.selection[n, i]), float(SELECTION[n, i]), TOL))
    for n in range(9):
        cells.append(Cell(f"COP[s{n + 1}]", float(report.cop_per_state.get(n, 0.0)), float(STATE_COP[n]), TOL))
    cells.append(Cell("EOP", report.eop, EOP, TOL))
    cells.append(Cell("overall COP", report.cop_overall, COP, TOL))
    for i in range(2):
        cells.append(Cell(f"p_T,{i + 1}", float(report.transmission_prob[i]), float(PT[i]), TOL))
    for i in range(2):
        cells.append(Cell(f"ATD_{i + 1}", float(report.atd_slots[i]), float(ATD[i]), ATD_TOL))
    return cells


def worst(cells: list[Cell]) -> Cell:
    return max(cells, key=lambda c: c.error / c.tol)
