"""Session-wide fixtures.

The production calibration (101-point flux sweep of the 486-dimensional
circuit model plus both fits) costs about half a minute, so it is built
once per session and shared between the calibration tests and the
acceptance suite.
"""

import warnings
from types import SimpleNamespace

import numpy as np
import pytest

from pulsebench.calibration import calibrate_duffing, calibrate_effective, sweep_circuit
from pulsebench.device import TruncationConfig, default_device

PRODUCTION_FLUX_GRID = np.linspace(0.0, 0.45, 101)


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, label): numbered acceptance check, summarized at the end",
    )
    config._criterion_status = {}
    config._criterion_labels = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when == "teardown":
        return
    num = int(marker.args[0])
    item.config._criterion_labels[num] = marker.args[1] if len(marker.args) > 1 else ""
    status = item.config._criterion_status
    if report.outcome == "passed":
        if report.when == "call":
            status.setdefault(num, "PASS")
    else:
        # failed, errored in setup, or skipped: the criterion did not pass
        status[num] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    status = getattr(config, "_criterion_status", None)
    if not status:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(status):
        label = config._criterion_labels.get(num, "")
        terminalreporter.write_line(f"criterion {num:2d}: {status[num]}  {label}")


@pytest.fixture(scope="session")
def production_calibration():
    device = default_device()
    trunc = TruncationConfig()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        extractions, failures = sweep_circuit(device, trunc, PRODUCTION_FLUX_GRID)
        effective = calibrate_effective(extractions, device.omega_c, order=4)
        duffing = calibrate_duffing(
            device, trunc, PRODUCTION_FLUX_GRID, targets=extractions, order=4
        )
    return SimpleNamespace(
        device=device,
        trunc=trunc,
        phis=PRODUCTION_FLUX_GRID,
        extractions=extractions,
        failures=failures,
        effective=effective,
        duffing=duffing,
    )
