import pytest

from anxiometer.synth import SynthConfig, generate_synthetic


@pytest.fixture(scope="session")
def small_world():
    cfg = SynthConfig(n_labeled=120, n_users=30, tweets_per_user=10, n_raters=60)
    return generate_synthetic(cfg, seed=11)


@pytest.fixture(scope="session")
def world_dir(tmp_path_factory, small_world):
    out = tmp_path_factory.mktemp("world")
    small_world.write(out)
    return out


_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    detail = getattr(item, "acceptance_detail", "")
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _ACCEPTANCE[n] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, status, detail = _ACCEPTANCE[n]
        line = f"criterion {n:>2} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
