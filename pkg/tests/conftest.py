import pytest

from eventrecon import _backend


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param
