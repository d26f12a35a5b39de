"""Figure generation for pilotsim result CSVs."""

__version__ = "0.1.0"

from .figures import (FIGURE_KINDS, RATE_CDF, SER_VS_M, SER_VS_SNR,
                      SUMRATE_VS_TAU, FigureSpec, RenderReport, SchemaError,
                      render)
