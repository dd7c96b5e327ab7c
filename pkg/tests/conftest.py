import os

import numpy as np
from hypothesis import settings, strategies as st

from normnet.net import random_net
from normnet.rng import stream

settings.register_profile("default", max_examples=40, deadline=None, derandomize=True)
settings.register_profile("stress", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def nets(draw, min_depth=1, max_depth=3, max_width=6, input_dim=None, output_dim=None):
    d = input_dim or draw(st.integers(1, 4))
    depth = draw(st.integers(min_depth, max_depth))
    hidden = [draw(st.integers(1, max_width)) for _ in range(depth)]
    k = output_dim or draw(st.integers(1, 3))
    seed = draw(st.integers(0, 2**32 - 1))
    scale = draw(st.floats(0.2, 3.0))
    return random_net(stream(seed), [d, *hidden, k], scale=scale)


def points(seed, n, d, lo=-1.0, hi=1.0):
    return stream(seed, 99).uniform(lo, hi, size=(n, d))


def assert_same_function(f, g, X, rtol=1e-10, atol=1e-12):
    np.testing.assert_allclose(np.asarray(f(X)), np.asarray(g(X)), rtol=rtol, atol=atol)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
