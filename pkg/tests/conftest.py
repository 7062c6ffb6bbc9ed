import pytest

from contour_bench.synthetic import write_fixture


@pytest.fixture
def fixture_dir(tmp_path):
    """Two 64x64 synthetic tiles with building/road/water masks."""
    paths = write_fixture(tmp_path / "src", n_images=2, size=64, seed=1)
    paths["root"] = tmp_path
    return paths


ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
