import pytest

from odtq import core

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(number, title): acceptance criterion record")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    key = marker.args[0]
    failed = report.failed or (report.when == "call" and report.skipped)
    entry = _CRITERIA.setdefault(key, [marker.args[1], True, 0.0])
    if report.when == "call":
        entry[2] = report.duration
    if failed:
        entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        title, passed, seconds = _CRITERIA[key]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"criterion {key:>3}: {status}  {title}  ({seconds:.2f} s)")


@pytest.fixture(scope="session")
def cs():
    return core.get_species("cs-1064")


@pytest.fixture(scope="session")
def cs_blue():
    return core.get_species("cs-848")


@pytest.fixture(scope="session")
def rb():
    return core.get_species("rb87-852")


@pytest.fixture(scope="session")
def red_trap():
    """Cs tweezer at 1064 nm: w0 = 2.1 um, U0 = 1 mK."""
    return core.RedGaussian(wavelength=1064e-9, waist=2.1e-6,
                            depth=core.mK_to_J(1.0))


@pytest.fixture(scope="session")
def blue_lattice():
    return core.BlueLattice(periods=(5e-6,) * 3, bottom=core.uK_to_J(0.16),
                            barrier_ratios=(400.0,) * 3)

