import numpy as np
import pytest

from maxcon import Dataset, Tolerance


@pytest.fixture
def axis_dataset() -> Dataset:
    """Five points: four on y=0, one lifted by 0.5.  With eps=0.1 the
    best consensus is the four axis points (mask 11110)."""
    return Dataset(
        features=np.array([[0.0, 1], [1.0, 1], [2.0, 1], [3.0, 1], [4.0, 1]]),
        targets=np.array([0.0, 0.0, 0.0, 0.0, 0.5]),
    )


@pytest.fixture
def axis_tol() -> Tolerance:
    return Tolerance(0.1)
