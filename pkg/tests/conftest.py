import numpy as np
import pytest

from pilotsim import SystemConfig

# Normalized geometry: distances in cell radii, wavelength 4*pi of those
# units, so the cell-edge free-space gain is exactly 1 and transmit SNR
# equals cell-edge receive SNR.
UNIT_WAVELENGTH = 4.0 * np.pi


@pytest.fixture
def unit_cell():
    """Factory for small normalized-geometry configs."""

    def make(**overrides):
        params = dict(
            N=8, K=4, S=3, M=8, L=16, tau=4,
            cell_radius=1.0, min_radius=0.02, wavelength=UNIT_WAVELENGTH,
            chart_dim=2, chart_neighbors=3,
        )
        params.update(overrides)
        return SystemConfig(**params)

    return make
