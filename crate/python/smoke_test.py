"""Smoke test for the qdomain extension module."""

import math

import qdomain

ZERO_PROJ = "dim 2\n1 0\n0 0\n"


def test_wp_hadamard():
    r = qdomain.wp("(unitary H)\n", ZERO_PROJ, state=ZERO_PROJ)
    assert r["converged"]
    assert abs(r["precondition_pairing"] - 0.5) < 1e-12
    assert abs(r["state_pairing"] - 0.5) < 1e-12


def test_laws():
    checks = qdomain.monad_laws(seed=3, instances=20)
    assert checks and all(c["verdict"] == "pass" for c in checks)
    assert [c["name"] for c in checks] == sorted(c["name"] for c in checks)
    broken = qdomain.table_laws("sum a a 1\nperp 0 1\nperp a b\n")
    failed = {c["name"] for c in broken if c["verdict"] == "fail"}
    assert "ea/orthocomplement-unique" in failed


def test_order_and_commutant():
    half = "map blocks 2 -> blocks 2\nitem 0 0\ndim 2\n0.5 0\n0 0.5\n"
    ident = "map blocks 2 -> blocks 2\nitem 0 0\ndim 2\n1 0\n0 1\n"
    assert qdomain.maps_leq(half, ident)
    assert not qdomain.maps_leq(ident, half)
    assert qdomain.commutant_dim("dim 2\n1 0\n0 2\n") == 2


def test_counterexamples():
    for n in range(2, 10):
        closed = 1 / math.sqrt(sum(k * k for k in range(1, n + 1)))
        assert abs(qdomain.ell2_distance(n) - closed) < 1e-12
    w = qdomain.no_lub_witness("0 1\n1 1\n")
    assert w["delta"] == "1/8"
    try:
        qdomain.no_lub_witness("0 0\n1 1/2\n")
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok {name}")
