import numpy as np
import pytest

from landplan.occupancy import GridSpec, OccupancyGrid
from landplan.penalty import PenaltyWeights
from landplan.grid_search import SearchWeights, plan_ggwp, plan_lp_astar


@pytest.fixture(scope="session")
def kernels_warm():
    """Compile the numba search kernels once so timed tests measure search only."""
    grid = OccupancyGrid(GridSpec((4, 4, 3), (1.0, 1.0, 1.0), (2.0, 2.0, 1.5)))
    init, goal = (0.5, 0.5, 0.5), (3.5, 3.5, 2.5)
    plan_lp_astar(init, goal, grid, None, SearchWeights(PenaltyWeights(1, 0), w_astar=1.0))
    plan_ggwp(init, goal, grid)
    return True
