import numpy as np
import pytest

from entlogdet.maxent import Grid


@pytest.fixture(scope="session")
def grid():
    return Grid(1e-3)


@pytest.fixture(scope="session")
def exp2_density(grid):
    """q*(x) proportional to exp(-2x) on (0, 1), normalized on the grid."""
    x = grid.nodes
    q = np.exp(-2.0 * x)
    return q / (q.sum() * grid.dx)


@pytest.fixture(scope="session")
def exp2_moments(grid, exp2_density):
    """Grid moments of q* for orders 0..8."""
    return grid.powers(8) @ exp2_density * grid.dx
