import pytest

from homlab.geometry import EtaProfile
from homlab.harness import SweepConfig, run_sweep
from homlab.operators import OperatorSpec


@pytest.fixture(scope="session")
def flagship_report(tmp_path_factory):
    """One full flagship sweep, shared by every test that inspects it.

    sine_bump (1, 1), regularized radial operator, f = 1, four eps
    halvings at 16 cells per period.  Takes a few seconds; the report is
    consumed read-only.
    """
    cfg = SweepConfig(
        profile=EtaProfile("sine_bump", (1.0, 1.0)),
        operator=OperatorSpec("radial_regularized"),
        output_dir=str(tmp_path_factory.mktemp("flagship")),
    )
    return run_sweep(cfg)
