import numpy as np
import pytest

from qlstm import backend


@pytest.fixture(params=["numpy", "numba"])
def kernel_backend(request):
    """Run a test under both kernel backends, restoring auto afterwards."""
    backend.use_backend(request.param)
    yield request.param
    backend.use_backend("auto")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
