import numpy as np
import pytest

from sphdesign import io as sio
from sphdesign.framelet import decompose, get_bank
from sphdesign.pointsets import uniform
from sphdesign.sht import HarmonicCoeffs, ncoeffs
from sphdesign.variational import ant_value


def test_points_roundtrip(tmp_path):
    p = uniform(37, seed=2)
    sio.write_points(tmp_path / "p.txt", p, t=5, note="x")
    q, fields = sio.read_points(tmp_path / "p.txt")
    assert np.array_equal(p.theta, q.theta) and np.array_equal(p.phi, q.phi)
    assert fields["t"] == "5" and fields["N"] == "37"


def test_coeffs_roundtrip(tmp_path, rng):
    c = HarmonicCoeffs(4, rng.normal(size=25) + 1j * rng.normal(size=25))
    sio.write_coeffs(tmp_path / "c.txt", c)
    d = sio.read_coeffs(tmp_path / "c.txt")
    assert d.t == 4 and np.array_equal(c.data, d.data)


@pytest.mark.parametrize("cplx", [False, True])
def test_field_roundtrip(tmp_path, rng, cplx):
    v = rng.normal(size=11) + (1j * rng.normal(size=11) if cplx else 0)
    sio.write_field(tmp_path / "f.txt", v)
    assert np.array_equal(sio.read_field(tmp_path / "f.txt"), v)


def test_grid_roundtrip(tmp_path):
    g = np.arange(12.0).reshape(3, 4)
    sio.write_grid(tmp_path / "g.txt", g)
    assert np.array_equal(sio.read_grid(tmp_path / "g.txt"), g)


def test_pyramid_roundtrip(tmp_path, small_chain, rng):
    f = rng.normal(size=len(small_chain.points[-1]))
    pyr = decompose(f, small_chain, get_bank("eta2"))
    sio.write_pyramid(tmp_path / "p.txt", pyr, small_chain.degrees, "eta2")
    back, fields = sio.read_pyramid(tmp_path / "p.txt")
    assert fields["bank"] == "eta2" and fields["t"] == "4,8,16"
    assert np.array_equal(back.v, pyr.v)
    assert back.bands() == pyr.bands()
    for k in pyr.w:
        assert np.array_equal(back.w[k], pyr.w[k])


@pytest.mark.parametrize("text", [
    "",
    "# points N=2\n0 0\n",
    "# field N=1\n1 2\n",
    "# points N=1\n0 nan\n",
    "# grid m=2 n=2\n1 2 3\n",
    "# shc t=1\n0 0 1 0\n",
    "# nonsense\n",
    "# points N=x\n",
    "# points N=1 bad\n0 0\n",
])
def test_malformed(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    readers = [sio.read_points, sio.read_field, sio.read_grid, sio.read_coeffs, sio.read_pyramid]
    for reader in readers:
        with pytest.raises(sio.FormatError):
            reader(path)


def test_missing_file(tmp_path):
    with pytest.raises(sio.FormatError):
        sio.read_points(tmp_path / "nope.txt")


def test_pyramid_errors(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("# pyramid levels=2\n1 0\n")
    with pytest.raises(sio.FormatError):
        sio.read_pyramid(path)
    path.write_text("# pyramid levels=2\n# band j=0 s=1\n1 0\n")
    with pytest.raises(sio.FormatError):
        sio.read_pyramid(path)


@pytest.mark.parametrize("t", sio.SHIPPED_DEGREES)
def test_shipped_designs(t):
    X = sio.load_design(t)
    assert len(X) == (t + 1) ** 2
    assert max(ant_value(X, t), 0.0) ** 0.5 <= 1e-10
    with pytest.raises(ValueError):
        sio.shipped_design_path(7)
    assert ncoeffs(t) == len(X)
