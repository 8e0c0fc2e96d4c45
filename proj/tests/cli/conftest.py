import pytest


def pytest_addoption(parser):
    parser.addoption("--perception-bin", action="store", default="perception")


@pytest.fixture
def perception_bin(request):
    return request.config.getoption("--perception-bin")
