"""CSV / text emission with full double precision and atomic writes.

Numbers are formatted with 17 significant digits via repr-style '%.17g', so
files are locale-independent and round-trip exactly; identical trajectories
produce byte-identical files.
"""

from __future__ import annotations

import os
import tempfile

from .diagnostics import EnergyRecord, SweepReport

__all__ = ["format_g17", "atomic_write_text", "energy_csv_text",
           "write_energy_csv", "sweep_csv_text", "write_sweep_csv",
           "write_summary"]


def format_g17(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def energy_csv_text(records: list[EnergyRecord]) -> str:
    lines = [",".join(EnergyRecord.FIELDS)]
    for r in records:
        lines.append(",".join(format_g17(getattr(r, name))
                              for name in EnergyRecord.FIELDS))
    return "\n".join(lines) + "\n"


def write_energy_csv(path: str, records: list[EnergyRecord]) -> None:
    atomic_write_text(path, energy_csv_text(records))


def sweep_csv_text(report: SweepReport) -> str:
    lines = ["parameter,error"]
    for p, e in zip(report.parameter_values, report.errors):
        lines.append(f"{format_g17(p)},{format_g17(e)}")
    if report.slope is not None:
        lines.append(f"slope,{format_g17(report.slope)}")
    if report.target_slope is not None:
        lines.append(f"target_slope,{format_g17(report.target_slope)}")
    if report.ratio is not None:
        lines.append(f"ratio,{format_g17(report.ratio)}")
    if report.ratio_bound is not None:
        lines.append(f"ratio_bound,{format_g17(report.ratio_bound)}")
    lines.append(f"pass,{1 if report.passed else 0}")
    return "\n".join(lines) + "\n"


def write_sweep_csv(path: str, report: SweepReport) -> None:
    atomic_write_text(path, sweep_csv_text(report))


def write_summary(path: str, entries: list[tuple[str, object]]) -> None:
    lines = []
    for name, value in entries:
        if isinstance(value, float):
            lines.append(f"{name} = {format_g17(value)}")
        else:
            lines.append(f"{name} = {value}")
    atomic_write_text(path, "\n".join(lines) + "\n")
