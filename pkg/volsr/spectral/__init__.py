"""
Volsr spectral evaluation: plane FFTs, amplitude/phase maps, error statistics, reports.
"""

from .fft import AMPLITUDE_FLOOR, Spectrum2D, amplitude_map, dft_matrix, fft2d, phase_map
from .metrics import ErrorStats, field_error, max_value_loss, mean_squared_error, spectrum_error
from .report import CSV_COLUMNS, EvalReport, PlaneSpec, ReportRow, eval_report

__all__ = [
    'AMPLITUDE_FLOOR',
    'Spectrum2D',
    'dft_matrix',
    'fft2d',
    'amplitude_map',
    'phase_map',
    'ErrorStats',
    'field_error',
    'spectrum_error',
    'mean_squared_error',
    'max_value_loss',
    'CSV_COLUMNS',
    'PlaneSpec',
    'ReportRow',
    'EvalReport',
    'eval_report',
]
