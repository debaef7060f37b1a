import time

import pytest

from xvden.benchmark import BenchmarkConfig, BenchmarkResult, run_benchmark


@pytest.fixture(scope="session")
def benchmark_result() -> BenchmarkResult:
    """The default seeded benchmark, run once and shared by every test."""
    start = time.perf_counter()
    result = run_benchmark(BenchmarkConfig())
    result.elapsed_s = time.perf_counter() - start
    return result
