"""Write the small JSON inputs used by the CLI tests into tests/data/.

    python3 scripts/make_fixtures.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from wallcross import jsonio
from wallcross.exact import QQi
from wallcross.hlt import AlmostStandardConnection, gauge_apply, random_gauge
from wallcross.lattice import CentralCharge
from wallcross.lie import SkewForm, TruncationContext
from wallcross.repro import airy_stokes
from wallcross.stability import data_from_dt


def main(out="tests/data"):
    out = Path(out)
    ctx = TruncationContext.orthant(2, 8)
    Z = CentralCharge([QQi(1, 2), QQi(-1, 2)])
    sig = data_from_dt(Z, {(1, 0): 1, (0, 1): 1}, SkewForm.standard(), ctx)
    jsonio.save({"schema_version": 1, "data": sig.to_json()}, out / "two_charges.json")

    rng = np.random.default_rng(7)
    st = AlmostStandardConnection.standard(2, 3, 3)
    h = random_gauge(2, 3, st.ctx, rng, zdeg=1)
    jsonio.save({"schema_version": 1, "connection": gauge_apply(h, st).to_json()}, out / "gauged_connection.json")

    jsonio.save({"schema_version": 1, **airy_stokes().to_json()}, out / "airy_stokes.json")
    print(f"wrote fixtures to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
