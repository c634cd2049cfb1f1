"""Smoke test for the `anw` Python extension.

Build first with `cargo build -p anw-py` (or `maturin develop` in
crates/py); the script picks up target/{release,debug}/libanw.so when the
module is not already importable.
"""

import importlib
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    try:
        return importlib.import_module("anw")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libanw.so", "libanw.dylib", "anw.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                tmp = Path(tempfile.mkdtemp())
                suffix = ".pyd" if name.endswith(".dll") else ".so"
                shutil.copy(lib, tmp / f"anw{suffix}")
                sys.path.insert(0, str(tmp))
                return importlib.import_module("anw")
    sys.exit("anw extension not found; run `cargo build -p anw-py` first")


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    anw = load()

    arr = anw.Array(5, c0=0.70, eta=0.025)
    eig = arr.eigen()
    s3 = math.sqrt(3) * 0.70
    for got, want in zip(eig["eigenvalues"], [s3, 0.70, 0.0, -0.70, -s3]):
        assert close(got, want, 1e-12), (got, want)
    assert eig["zero_supermode"] == 3

    analytic = arr.covariance(10.0)
    numeric = arr.numeric_covariance(10.0)
    diff = max(abs(a - b) for ra, rb in zip(analytic, numeric) for a, b in zip(ra, rb))
    assert diff < 1e-10, diff

    report = arr.vlf(20.0)
    assert len(report["values"]) == 2
    assert all(v < 4.0 for v in report["values"])
    assert report["fully_inseparable"]

    assert close(anw.asymptotic_vlf(4, 0.025, math.inf), 17 / 6)
    assert close(anw.asymptotic_vlf(5, 0.025, math.inf), 3.2 - 3.2 / 22)

    lc = anw.large_coupling_covariance(6, 0.025, 20.0)
    graph_a = anw.duan_graph(lc, "a")
    assert len(graph_a["edges"]) == 9
    graph_b = anw.duan_graph(lc, "b")
    assert graph_b["components"] == [[1, 3, 5], [2, 4, 6]]

    adj = anw.adjacency(3, 0.025, 200.0)
    assert close(adj["trace_u"], 2.0, 1e-6)

    try:
        anw.Array(4).vlf(1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("even array accepted for VLF")

    print("anw python smoke test: ok")


if __name__ == "__main__":
    main()
