import numpy as np
import pytest

from llg_lattice.grid import Boundary, GridSpec, VectorField
from llg_lattice.io import SnapshotError, read_pgm, read_snapshot, write_pgm, write_snapshot


def test_snapshot_roundtrip(tmp_path, rng):
    spec = GridSpec(0.125, 6, 5, Boundary.CONSTANT_FAR_FIELD)
    u = VectorField(spec, rng.normal(size=(6, 5, 3)))
    write_snapshot(u, tmp_path / "u.llgf")
    data = (tmp_path / "u.llgf").read_bytes()
    assert data[:4] == b"LLGF" and len(data) == 4 + 4 * 3 + 8 + 1 + 6 * 5 * 3 * 8
    back = read_snapshot(tmp_path / "u.llgf")
    assert back.spec == spec and np.array_equal(back.values, u.values)


def test_snapshot_rejects_corruption(tmp_path, rng):
    u = VectorField(GridSpec(0.5, 4, 4), rng.normal(size=(4, 4, 3)))
    path = tmp_path / "u.llgf"
    write_snapshot(u, path)
    raw = path.read_bytes()
    for bad, msg in [(b"XXXX" + raw[4:], "magic"), (raw[:-8], "bytes"), (raw[:10], "short"),
                     (raw[:4] + (2).to_bytes(4, "little") + raw[8:], "version")]:
        path.write_bytes(bad)
        with pytest.raises(SnapshotError, match=msg):
            read_snapshot(path)


def test_pgm_roundtrip(tmp_path):
    img = np.arange(12, dtype=float).reshape(3, 4) * 0.5 + 1
    lo, hi = write_pgm(img, tmp_path / "a.pgm")
    assert (lo, hi) == (1.0, 6.5)
    pix = read_pgm(tmp_path / "a.pgm")
    assert pix.shape == (3, 4) and pix[0, 0] == 0 and pix[-1, -1] == 255
    assert np.all(np.diff(pix.ravel().astype(int)) > 0)
    assert (tmp_path / "a.pgm").read_bytes().startswith(b"P5\n4 3\n255\n")
    write_pgm(np.full((2, 2), 3.0), tmp_path / "flat.pgm")
    assert np.all(read_pgm(tmp_path / "flat.pgm") == 0)
    (tmp_path / "bad.pgm").write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError):
        read_pgm(tmp_path / "bad.pgm")
