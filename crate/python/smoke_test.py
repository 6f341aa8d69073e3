"""Smoke test for the `qes` extension module.

Build and install first, for example:

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/qes-*.whl
"""

import json
import math

import qes


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    sn, cn, dn = qes.jacobi(0.7, 0.5)
    assert close(sn * sn + cn * cn, 1.0, 1e-12)
    assert close(dn * dn + 0.25 * sn * sn, 1.0, 1e-12)
    assert close(qes.complete_k(0.0), math.pi / 2, 1e-14)

    sectors = qes.lame_sectors(1, 0.5)
    assert [s.dim for s in sectors] == [2, 1, 1, 1]
    assert all(s.residual < 1e-8 for s in sectors)
    circular = sorted(e for s in qes.lame_sectors(1, 0.0) for e in s.eigenvalues)
    assert all(close(a, b, 1e-10) for a, b in zip(circular, [0, 1, 1, 4, 4]))

    report = qes.run_lame(1, 0.5, grid=512)
    assert report.passed and len(report.eigenvalues) == 5
    doc = json.loads(report.to_json())
    assert list(doc) == ["system", "params", "sectors", "reference", "checks"]
    assert report.to_csv().count("\n") == 6

    mb = qes.manybody_sectors(2, 2.0, 0.0, m=1)
    assert len(mb) == 4 and sum(s.dim for s in mb) == 6
    assert qes.manybody_sectors(2, 2.0, 0.0, c=qes.coupling_cm(2, 2.0, 0.0, 1) + 1) == []

    a, theta, kappa = qes.coupled_constants(1, 0.6, 0.3, constants="printed")
    assert close(a, 1.26, 1e-12) and close(theta, -2.88, 1e-12) and close(kappa, 1.2, 1e-12)
    assert [s.dim for s in qes.coupled_sectors(1, 0.6, 1.0)] == [3, 2]
    try:
        qes.coupled_sectors(1, 0.6, 0.3, constants="printed")
    except qes.NotQesError:
        pass
    else:
        raise AssertionError("literal constants should be refused")
    try:
        qes.coupled_sectors(1, 0.6, 0.3)
    except ValueError:
        pass
    else:
        raise AssertionError("complex locus should be rejected")

    assert qes.trig_block(2, 0.2, 0, "E") == [[1.2]]
    assert qes.trig_closed_form(1, 0.0, 1) == (0.0, 4.0)
    assert qes.run_trig(1, 0.0, pmax=2, grid=512).passed

    assert [c[2] for c in qes.run_verify("elliptic")] == [True]
    print("qes smoke test passed")


if __name__ == "__main__":
    main()
