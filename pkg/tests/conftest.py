"""
Pytest configuration and fixtures
Shared fixtures for all tests
"""

import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    """Directory holding static test files"""
    return FIXTURES


@pytest.fixture
def rng():
    """Seeded generator for random test inputs"""
    return np.random.default_rng(1234)


@pytest.fixture
def quad():
    """Small strongly-convex-strongly-concave quadratic over 4 agents"""
    from core.objective import quad_problem
    return quad_problem(d1=5, d2=5, m=4, seed=7)


@pytest.fixture
def noisy_quad():
    """Quadratic whose samples shift the linear terms"""
    from core.objective import quad_problem
    return quad_problem(d1=3, d2=2, m=3, seed=11, sample_noise=0.5)


@pytest.fixture
def synth_data():
    """Synthetic binary dataset, normalized"""
    from core.data import normalize_max_norm, synth_binary
    return normalize_max_norm(synth_binary(n=240, d=6, margin=1.0, seed=3))


@pytest.fixture
def rlr(synth_data):
    """Robust logistic regression over 3 iid shards"""
    from core.data import shard
    from core.models import ShardMode
    from core.objective import RobustLogisticRegression

    sharding = shard(synth_data, 3, ShardMode.IID, seed=0)
    return RobustLogisticRegression.from_dataset(synth_data, sharding)


@pytest.fixture
def ring4():
    """Metropolis weights on the 4-cycle"""
    from core.topology import Graph, metropolis_weights
    return metropolis_weights(Graph.ring(4))


@pytest.fixture
def quick_config(tmp_path):
    """Small synthetic experiment document written to disk"""
    document = {
        'dataset': {'kind': 'synthetic', 'synthetic': {'n': 300, 'd': 5, 'margin': 1.5}},
        'topology': {'m': 3, 'p': 0.6, 'seed': 1},
        'optimizer': {'eta_x': 0.5, 'eta_y': 0.01, 'beta_x': 0.3, 'beta_y': 0.3, 'b0': 10, 'batch': 10},
        'privacy': {'theta': 1.0, 'gamma': 1.0e-5},
        'schedule': {'epochs': 2},
        'metrics': {'inner_steps': 20},
        'output': {'path': str(tmp_path / "out" / "run.csv"), 'wall_clock': False},
        'logging': {'level': 'WARNING'},
        'advanced': {'max_workers': 2},
        'methods': ['dpmixsgd', 'dm_hsgd'],
        'seeds': [0, 1],
    }
    path = tmp_path / "quick.yaml"
    path.write_text(yaml.safe_dump(document), encoding='utf-8')
    return path


# Pytest configuration
def pytest_configure(config):
    """Configure pytest"""
    config.addinivalue_line(
        "markers", "unit: mark test as a unit test"
    )
    config.addinivalue_line(
        "markers", "integration: mark test as an integration test"
    )
    config.addinivalue_line(
        "markers", "slow: mark test as slow running"
    )
