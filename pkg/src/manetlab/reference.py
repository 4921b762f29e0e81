"""Reference result tables for MaNet and jSO, transcribed verbatim.

Read-only reference data: error-to-optimum statistics over 51 runs for
D = 30 and D = 50, plus the reference Wilcoxon sign (MaNet vs jSO).
Never regenerated from local runs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .stats import SummaryRow

# function, algorithm, best, worst, mean, median, std, sign
_TABLE_D30 = """\
1 MaNet 3.71e+02 1.33e+03 7.94e+02 8.02e+02 2.03e+02 -
1 jSO 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 -
3 MaNet 3.69e+04 7.10e+04 5.85e+04 5.85e+04 6.46e+03 -
3 jSO 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 -
4 MaNet 1.46e-05 3.99e+00 5.88e-01 6.79e-04 1.41e+00 +
4 jSO 5.86e+01 6.41e+01 5.87e+01 5.86e+01 7.78e-01 +
5 MaNet 0.00e+00 1.99e+00 5.85e-01 1.34e-07 6.59e-01 +
5 jSO 3.98e+00 1.32e+01 8.56e+00 8.02e+00 2.10e+00 +
6 MaNet 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 =
6 jSO 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 =
7 MaNet 3.26e+01 3.41e+01 3.33e+01 3.33e+01 3.91e-01 +
7 jSO 3.61e+01 4.31e+01 3.89e+01 3.91e+01 1.46e+00 +
8 MaNet 0.00e+00 4.97e+00 2.29e+00 1.99e+00 1.15e+00 +
8 jSO 4.97e+00 1.30e+01 9.09e+00 8.96e+00 1.84e+00 +
9 MaNet 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 =
9 jSO 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 =
10 MaNet 1.09e+04 1.13e+04 1.11e+04 1.11e+04 1.19e+02 -
10 jSO 1.04e+03 2.04e+03 1.53e+03 1.49e+03 2.77e+02 -
"""

_TABLE_D50 = """\
1 MaNet 3.67e+02 2.06e+03 1.39e+03 1.46e+03 3.71e+02 -
1 jSO 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 -
3 MaNet 9.80e+04 1.42e+05 1.23e+05 1.25e+05 8.88e+03 -
3 jSO 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 -
4 MaNet 3.10e-06 1.53e-03 8.22e-04 9.96e-04 4.46e-04 +
4 jSO 1.32e-04 1.42e+02 5.62e+01 2.85e+01 4.88e+01 +
5 MaNet 1.99e+00 1.09e+01 6.15e+00 5.97e+00 2.20e+00 +
5 jSO 8.96e+00 2.39e+01 1.64e+01 1.62e+01 3.46e+00 +
6 MaNet 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 =
6 jSO 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 =
7 MaNet 5.49e+01 5.65e+01 5.58e+01 5.59e+01 3.62e-01 +
7 jSO 5.75e+01 7.42e+01 6.65e+01 6.66e+01 3.47e+00 +
8 MaNet 1.99e+00 8.95e+00 5.41e+00 5.97e+00 1.99e+00 +
8 jSO 9.95e+00 2.41e+01 1.70e+01 1.70e+01 3.14e+00 +
9 MaNet 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 =
9 jSO 0.00e+00 0.00e+00 0.00e+00 0.00e+00 0.00e+00 =
10 MaNet 1.86e+04 1.88e+04 1.87e+04 1.87e+04 6.25e+01 -
10 jSO 2.40e+03 3.79e+03 3.14e+03 3.23e+03 3.67e+02 -
"""

TRANSCRIPTIONS = {30: _TABLE_D30, 50: _TABLE_D50}


@dataclass(frozen=True)
class ReferenceRow:
    algorithm: str
    row: SummaryRow
    text: tuple[str, ...]  # the five statistics exactly as printed
    sign: str


def _parse(dimension: int) -> list[ReferenceRow]:
    rows = []
    for line in TRANSCRIPTIONS[dimension].splitlines():
        fid, algo, *stats, sign = line.split()
        values = [float(s) for s in stats]
        rows.append(ReferenceRow(algo.lower(), SummaryRow(int(fid), dimension, *values), tuple(stats), sign))
    return rows


class ReferenceTable:
    """Lookup over the transcribed tables: ``table.get("jso", 5, 30)``."""

    def __init__(self):
        self._rows = {
            (r.algorithm, r.row.function, dim): r for dim in TRANSCRIPTIONS for r in _parse(dim)
        }

    def get(self, algorithm: str, function: int, dimension: int) -> ReferenceRow:
        return self._rows[(algorithm.lower(), function, dimension)]

    def rows(self, algorithm: str, dimension: int) -> list[SummaryRow]:
        return sorted(
            (r.row for (a, _, d), r in self._rows.items() if a == algorithm.lower() and d == dimension),
            key=lambda row: row.function,
        )

    def reference_sign(self, function: int, dimension: int) -> str:
        return self.get("manet", function, dimension).sign

    def dimensions(self) -> list[int]:
        return sorted(TRANSCRIPTIONS)
