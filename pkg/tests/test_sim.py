import numpy as np
import pytest

from genrank import _fallback
from genrank.errors import DomainError
from genrank.graph import RowStochasticMatrix, random_row_stochastic
from genrank.ingest import accumulate, estimate_model
from genrank.sim import SimConfig, simulate_sessions


def test_identity_gives_single_page_sessions(kernels):
    log = simulate_sessions(RowStochasticMatrix.from_dense(np.eye(4)), SimConfig(500, seed=3))
    assert np.all(log.session_lengths() == 1)
    assert len(set(log.nodes.tolist())) == 4


def test_seeded_determinism(kernels):
    W = random_row_stochastic(20, 4, seed=1)
    a = simulate_sessions(W, SimConfig(2000, seed=42))
    b = simulate_sessions(W, SimConfig(2000, seed=42))
    assert a == b
    assert a.nodes.tobytes() == b.nodes.tobytes()
    assert a != simulate_sessions(W, SimConfig(2000, seed=43))


@pytest.mark.parametrize("workers", [2, 3, 7])
def test_parallel_matches_sequential(kernels, workers):
    W = random_row_stochastic(30, 5, seed=2)
    cfg = SimConfig(3001, seed=9)
    assert simulate_sessions(W, cfg, workers=workers) == simulate_sessions(W, cfg)


def test_prefix_stability(kernels):
    # session s depends only on (seed, s)
    W = random_row_stochastic(10, 3, seed=0)
    short = simulate_sessions(W, SimConfig(100, seed=5))
    long = simulate_sessions(W, SimConfig(400, seed=5))
    assert [s.tolist() for s in short] == [s.tolist() for s in list(long)[:100]]


def test_backends_identical():
    from genrank import _backend
    compiled = _backend.compiled()
    if compiled is None:
        pytest.skip("compiled kernels not built")
    W = random_row_stochastic(50, 6, seed=8)
    start = np.random.default_rng(0).dirichlet(np.ones(50))
    for cfg in (SimConfig(5000, seed=123), SimConfig(5000, seed=7, start_distribution=start),
                SimConfig(500, seed=1, max_steps=3)):
        assert (simulate_sessions(W, cfg, backend=compiled)
                == simulate_sessions(W, cfg, backend=_fallback))


def test_max_steps_force_termination(kernels):
    W = RowStochasticMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
    log = simulate_sessions(W, SimConfig(10, seed=0, max_steps=5))
    assert np.all(log.session_lengths() == 5)
    assert log.forced_terminations == 10
    one = simulate_sessions(W, SimConfig(10, seed=0, max_steps=1))
    assert np.all(one.session_lengths() == 1) and one.forced_terminations == 10


def test_start_distribution(kernels):
    W = RowStochasticMatrix.from_dense(np.eye(3))
    log = simulate_sessions(W, SimConfig(1000, seed=4, start_distribution=[0.0, 0.0, 1.0]))
    assert set(log.nodes.tolist()) == {2}


@pytest.mark.parametrize("kwargs", [
    dict(n_sessions=0), dict(n_sessions=1, max_steps=0),
    dict(n_sessions=1, start_distribution=[0.5, 0.6]), dict(n_sessions=1, seed=-1),
])
def test_config_domain(kwargs):
    with pytest.raises(DomainError):
        SimConfig(**kwargs)


def test_geometric_length_bound(kernels):
    # stopping probability at every page is at least p = min w_ii
    W = random_row_stochastic(25, 5, seed=6, diag_range=(0.25, 0.6))
    p = W.diagonal.min()
    log = simulate_sessions(W, SimConfig(20_000, seed=17))
    assert log.session_lengths().mean() <= (1 / p) * 1.05
    assert log.forced_terminations == 0


def test_round_trip_binomial_oracle(kernels):
    W = RowStochasticMatrix.from_dense([[0.4, 0.6], [0.5, 0.5]])
    log = simulate_sessions(W, SimConfig(100_000, seed=2024))
    counts = accumulate(log, 2)
    What = estimate_model(counts).W.toarray()
    truth = W.toarray()
    # standard error of each estimated proportion at the realized visit counts
    se = np.sqrt(truth * (1 - truth) / counts.visits[:, None])
    assert 5 * se.max() <= 0.02
    assert np.abs(What - truth).max() <= 5 * se.max()
    assert log.forced_terminations == 0
