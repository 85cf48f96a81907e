import hypothesis
import pytest

from afdxsim.generators import fms_topology

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.load_profile("ci")


@pytest.fixture(scope="session")
def fms():
    return fms_topology()
