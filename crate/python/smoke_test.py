"""Smoke test for the eikonal_lab_py extension module."""

import math
import sys
import tempfile

import eikonal_lab_py as el


def main() -> int:
    const = el.Field.from_spec("builtin:constant:nx=16")
    assert const.shape == (16, 16)
    res, ok = const.check_divergence(1e-9)
    assert ok and res < 1e-12, res
    assert const.defect_measure() == []

    jump = el.Field.from_spec("builtin:single_jump:nx=64")
    total = sum(w for x, y, w in jump.defect_measure() if math.hypot(x, y) <= 1.0)
    expected = 2.0 * (math.sqrt(3.0) - math.pi / 3.0)
    assert abs(total - expected) / expected < 0.05, (total, expected)

    e_h, e_v, w1 = jump.representation(4)
    assert e_h >= 0.0 and e_v > 0.0 and w1 >= 0.0

    try:
        el.Field.from_spec("builtin:nope")
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    with tempfile.TemporaryDirectory() as out:
        code = el.run_cli(["run", "all", "--field", "builtin:constant:nx=16", "--n", "3:3", "--out", out])
        assert code == 0, code

    print(f"ok: nu={total:.4f} e_h={e_h:.4f} e_v={e_v:.4f} w1={w1:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
