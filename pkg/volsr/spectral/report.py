#!/usr/bin/env python3
"""
Volsr Evaluation Report
=======================

Compares predicted fields with the ground truth on one plane:

- velocity.csv       per method: min, max, max_err, avg_err of the plane values
- fft_amplitude.csv  the same statistics on the log-amplitude spectra, after a
                     `# amplitude=... log_base=... floor=...` comment row
- report.json        plane, log base, phase convention, per-method MSE and
                     max-value loss
- PGM panels         field, error, amplitude and phase maps of every method

Rows are ordered truth, coarse, then the predictions in the given order.

Version: 1.0.0
"""

import csv
import io
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from .fft import AMPLITUDE_FLOOR, LOG_BASE, PHASE_CONVENTION, amplitude_map, fft2d, phase_map
from .metrics import ErrorStats, field_error, max_value_loss, mean_squared_error, spectrum_error
from ..errors import ConfigError, ShapeError
from ..io.atomic import atomic_write_json, atomic_write_text
from ..io.planes import AXES, export_pgm, extract_plane
from ..io.volume import VolumeField

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('method', 'min', 'max', 'max_err', 'avg_err')
AMPLITUDE_CSV_COMMENT = f"# amplitude=ln(|F|+{AMPLITUDE_FLOOR!r}) log_base={LOG_BASE} floor={AMPLITUDE_FLOOR!r}"
_PLANE_PATTERN = re.compile(r'^\s*([xyz])\s*=\s*(mid|\d+)\s*$')

PathLike = Union[str, Path]


class PlaneSpec(BaseModel):
    axis: str = 'z'
    index: Optional[int] = None

    @classmethod
    def parse(cls, text: str) -> 'PlaneSpec':
        """'z=mid', 'x=10', ..."""
        match = _PLANE_PATTERN.match(text)
        if not match:
            raise ConfigError(f"plane spec must look like 'z=mid' or 'x=10', got {text!r}")
        axis, where = match.groups()
        return cls(axis=axis, index=None if where == 'mid' else int(where))

    def resolve(self, dims) -> int:
        extent = dims[AXES.index(self.axis)]
        index = extent // 2 if self.index is None else self.index
        if not 0 <= index < extent:
            raise ConfigError(f"plane index {index} out of range for {self.axis} extent {extent}")
        return index

    def label(self) -> str:
        return f"{self.axis}={'mid' if self.index is None else self.index}"


@dataclass
class ReportRow:
    method: str
    min: float
    max: float
    error: ErrorStats

    def as_csv(self) -> List[str]:
        return [self.method, _fmt(self.min), _fmt(self.max),
                _fmt(self.error.max_abs_error), _fmt(self.error.mean_abs_error)]


@dataclass
class EvalReport:
    plane: str
    component: str
    velocity: List[ReportRow] = field(default_factory=list)
    amplitude: List[ReportRow] = field(default_factory=list)
    summary: Dict[str, Dict[str, float]] = field(default_factory=dict)


def _fmt(value: float) -> str:
    return repr(float(value))


def _csv_text(rows: List[ReportRow], comment: Optional[str] = None) -> str:
    buffer = io.StringIO()
    if comment:
        buffer.write(comment + '\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.as_csv())
    return buffer.getvalue()


def eval_report(coarse: VolumeField, truth: VolumeField, predictions: Dict[str, VolumeField],
                plane: Union[str, PlaneSpec] = 'z=mid', out_dir: Optional[PathLike] = None,
                component: str = 'u', panels: bool = True) -> EvalReport:
    """
    Build (and optionally write) the comparison report.

    Args:
        coarse: LR field already brought to the truth grid
        truth: ground-truth field
        predictions: method name -> predicted field
        plane: plane spec ('z=mid' is the midsection X-Y plane)
        out_dir: directory for CSV / JSON / PGM outputs (None: compute only)
        component: velocity component to compare
    """
    spec = plane if isinstance(plane, PlaneSpec) else PlaneSpec.parse(plane)
    fields = {'truth': truth, 'coarse': coarse}
    for name, pred in predictions.items():
        if name in fields:
            raise ConfigError(f"prediction name '{name}' is reserved")
        fields[name] = pred
    for name, volume in fields.items():
        if volume.dims != truth.dims:
            raise ShapeError(f"{name} has dims {volume.dims}, truth has {truth.dims}")

    index = spec.resolve(truth.dims)
    truth_plane = extract_plane(truth, spec.axis, index, component).values
    truth_spectrum = fft2d(truth_plane)
    truth_amp = amplitude_map(truth_spectrum)

    report = EvalReport(plane=spec.label(), component=component)
    maps = {}
    for name, volume in fields.items():
        values = extract_plane(volume, spec.axis, index, component).values
        spectrum = fft2d(values)
        amp = amplitude_map(spectrum)
        maps[name] = (values, amp, phase_map(spectrum))
        report.velocity.append(ReportRow(name, float(values.min()), float(values.max()),
                                         field_error(values, truth_plane)))
        report.amplitude.append(ReportRow(name, float(amp.min()), float(amp.max()),
                                          spectrum_error(amp, truth_amp)))
        report.summary[name] = {
            'mse': mean_squared_error(values, truth_plane),
            'loss_max': max_value_loss(values, truth_plane),
            'volume_mse': mean_squared_error(volume.component(component), truth.component(component)),
        }

    if out_dir is not None:
        _write_report(report, maps, truth_plane, Path(out_dir), panels)
    return report


def _write_report(report: EvalReport, maps, truth_plane: np.ndarray, out_dir: Path, panels: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / 'velocity.csv', _csv_text(report.velocity))
    atomic_write_text(out_dir / 'fft_amplitude.csv', _csv_text(report.amplitude, AMPLITUDE_CSV_COMMENT))
    atomic_write_json(out_dir / 'report.json', {
        'plane': report.plane,
        'component': report.component,
        'amplitude_log_base': LOG_BASE,
        'amplitude_floor': AMPLITUDE_FLOOR,
        'phase_convention': PHASE_CONVENTION,
        'methods': report.summary,
    })
    if panels:
        for name, (values, amp, phase) in maps.items():
            export_pgm(values, out_dir / f'{name}_field.pgm')
            export_pgm(amp, out_dir / f'{name}_amplitude.pgm')
            export_pgm(phase, out_dir / f'{name}_phase.pgm')
            if name != 'truth':
                export_pgm(np.abs(values - truth_plane), out_dir / f'{name}_error.pgm')
    logger.info("✅ report written to %s (%d methods, plane %s)", out_dir, len(maps), report.plane)


__all__ = ['CSV_COLUMNS', 'AMPLITUDE_CSV_COMMENT', 'PlaneSpec', 'ReportRow', 'EvalReport', 'eval_report']
