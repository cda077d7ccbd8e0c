import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile(
    "numeric", max_examples=40, deadline=None, derandomize=True)
hypothesis.settings.load_profile("numeric")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
