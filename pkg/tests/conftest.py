import numpy as np
import pytest

from risae.numerics import RngStream
from risae.system import ModelParams, SystemDims, TrainConfig, build_dataset, make_channel, train


def tiny_system(n_ris=1, block_len=4, k=2, m=4, seed=0, ris_input="pilot", mobility=None):
    """Small link for fast unit tests: 2x2 RIS, narrow networks."""
    dims = SystemDims(m, block_len, k, k, k, 1, (4,) * n_ris)
    channel = make_channel(dims, ris_shape=(2, 2), mobility=mobility)
    params = ModelParams.init(dims, np.random.default_rng(seed), 1.0, (16,), (16,), (32,), ris_input)
    return dims, channel, params


@pytest.fixture(scope="session")
def trained_tiny():
    """Tiny 1-RIS link trained for a few epochs; tests must not mutate it."""
    dims, channel, params = tiny_system(seed=1)
    data = build_dataset(dims, channel, 200, RngStream(1, 11))
    train(params, data, TrainConfig(epochs=4, batch_blocks=8, snr_low=-5, snr_high=10), RngStream(1, 12))
    return params, data


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record(number: int, ok: bool, detail: str):
    ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
