import numpy as np
import pytest

from burgers_control import (
    BurgersProblem,
    Field,
    Grid,
    LinearProblem,
    Trajectory,
    solve_burgers,
    solve_linear,
)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger kernel compilation once so timed tests measure physics, not
    the JIT."""
    g = Grid(16)
    u0 = Field.from_function(g, lambda x: 0.1 * np.sin(np.pi * x))
    solve_burgers(BurgersProblem(nu=0.5, u0=u0, t_span=(0.0, 0.125), dt=0.0625))
    a = Trajectory.constant(Field.zeros(g), 0.0, 0.0625, 3)
    solve_linear(LinearProblem(nu=0.5, coeff=a, w0=u0, t_span=(0.0, 0.125), dt=0.0625))


def sine_field(grid: Grid, k: int = 1, amp: float = 1.0) -> Field:
    return Field(grid, amp * np.sin(k * np.pi * grid.x))


def zero_coeff(grid: Grid, t_end: float, n_frames: int = 3) -> Trajectory:
    dt = t_end / (n_frames - 1)
    return Trajectory.constant(Field.zeros(grid), 0.0, dt, n_frames)
