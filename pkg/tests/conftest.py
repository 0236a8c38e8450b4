import pytest

from cascade_st import _kernels_py

from helpers import MockModelServer

KERNEL_IMPLS = [pytest.param(_kernels_py, id="python")]
try:
    from cascade_st import _kernels as _compiled
except ImportError:
    pass
else:
    KERNEL_IMPLS.append(pytest.param(_compiled, id="cython"))


@pytest.fixture(params=KERNEL_IMPLS)
def kernel_impl(request):
    return request.param


@pytest.fixture
def model_server():
    with MockModelServer() as srv:
        yield srv
