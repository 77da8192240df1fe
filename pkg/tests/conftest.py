"""Session-scoped reference runs shared by the acceptance suite.

The heavy flows are computed once per session; each fixture returns the
trajectory (or scenario summary) together with the wall time of the run so
the acceptance tests can check their runtime budgets.
"""

import time

import pytest

from shrinkerlab.curvegeo import fourier_curve
from shrinkerlab.flowcore import StepControl, run_rmcf
from shrinkerlab.labcli import _normalize_unit_area, run, validate_config


@pytest.fixture(scope="session")
def rmcf_mixed_512():
    """Ungauged rescaled run of a mixed mode-2/3 perturbation at m = 512."""
    start = _normalize_unit_area(
        fourier_curve(1.0, (0.0, 0.05, 0.02), m=512))
    t0 = time.perf_counter()
    traj = run_rmcf(start, 2.0, frame_dtau=0.02, gauge="none",
                    control=StepControl())
    return traj, time.perf_counter() - t0


@pytest.fixture(scope="session")
def rmcf_radial_256():
    """Ungauged run launched off the stationary radius, m = 256.

    The dilation mode dominates here, so the energy balance is exercised
    far from the fixed shape.
    """
    start = fourier_curve(1.5, (0.0, 0.0, 0.02), m=256)
    t0 = time.perf_counter()
    traj = run_rmcf(start, 1.2, frame_dtau=0.02, gauge="none",
                    control=StepControl())
    return traj, time.perf_counter() - t0


@pytest.fixture(scope="session")
def rmcf_convex_128():
    """Deep gauged run of a convex perturbation, tau up to 14, m = 128."""
    start = _normalize_unit_area(
        fourier_curve(1.0, (0.0, 0.06, 0.02), m=128))
    t0 = time.perf_counter()
    traj = run_rmcf(start, 14.0, frame_dtau=0.05, gauge="area-centroid",
                    control=StepControl())
    return traj, time.perf_counter() - t0


@pytest.fixture(scope="session")
def separation_512(tmp_path_factory):
    """Equal-area ellipse vs circle separation experiment at m = 512."""
    out = tmp_path_factory.mktemp("separation512")
    config = validate_config({
        "scenario": "separation",
        "curve1": "ellipse(1.1, 0.9090909090909091)",
        "curve2": "circle(1)",
        "m": "512",
        "out": str(out),
        "tau_end": "7",
        "frame_dtau": "0.05",
        "cfl": "1.4",
    })
    t0 = time.perf_counter()
    summary = run(config)
    return summary, time.perf_counter() - t0, out
