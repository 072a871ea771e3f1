import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from laguerrehahn.laxpairs import default_samples, ladder_t, ladder_x
from laguerrehahn.mobius import build_tilde_system
from laguerrehahn.numerics import PrecisionContext
from laguerrehahn.weights import WeightParams

# Reference configuration used throughout: alpha, beta, mu fixed; t varies.
REF = ("0.3", "0.7", "1.5")


@pytest.fixture(scope="session")
def ctx320():
    return PrecisionContext(bits=320)


@pytest.fixture(scope="session")
def ref_ts(ctx320):
    """Reference transformed system at t = 2, ladder range 6."""
    params = WeightParams.create(*REF, "2", ctx320)
    return build_tilde_system(params, 6, ctx=ctx320)


@pytest.fixture(scope="session")
def ref_ladders(ctx320, ref_ts):
    ts = ref_ts
    with ctx320:
        ld_base_x = ladder_x(ts.base_qx, ts.w0, ts.base_rc, 6, ctx=ctx320)
        ld_x = ladder_x(ts.qx, ts.tw0, ts.trc, 6, ctx=ctx320)
        ld_t = ladder_t(ts.qt, ts.tw0, ts.trc, 6, ctx=ctx320)
    return ld_base_x, ld_x, ld_t


@pytest.fixture(scope="session")
def ref_samples(ctx320, ref_ts):
    return default_samples(ref_ts.params.t, 1234, ctx=ctx320)
