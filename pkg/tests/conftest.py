import pytest
from hypothesis import HealthCheck, settings

from optfwer import OptimizerConfig, parse_model
from optfwer.harness import get_fit

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CAMERER_P = (0.004, 0.006, 0.024, 0.068, 0.071, 0.090)


@pytest.fixture(scope="session")
def fit_cache(tmp_path_factory):
    """Session-wide fit memo; the cache key covers model, K and the full config."""
    cache_dir = tmp_path_factory.mktemp("fits")

    def get(model, K, **cfg):
        if isinstance(model, str):
            model = parse_model(model)
        return get_fit(model, K, OptimizerConfig(**cfg), cache_dir=cache_dir)

    get.cache_dir = cache_dir
    return get


# acceptance criteria register one line each; printed once at the end of the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(criterion: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0][1:])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
