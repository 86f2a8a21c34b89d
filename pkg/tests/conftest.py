import pytest
from hypothesis import settings

from hyptrace.groups import PRESETS, preset

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("repo")


@pytest.fixture(params=sorted(PRESETS))
def any_preset(request):
    return preset(request.param)


@pytest.fixture(scope="session")
def free2():
    return preset("free2")


@pytest.fixture(scope="session")
def example3():
    return preset("paper-example-3")
