import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphdesign.approx import wendland_field
from sphdesign.denoise import (
    DEFAULT_LAYERS,
    Denoiser,
    build_caps,
    cap_radius,
    caps_for_radius,
    denoise_pipeline,
    gaussian_noise,
    local_soft_band,
    local_soft_residual,
    psnr,
    snr,
    snr_power,
)
from sphdesign.framelet import get_bank
from sphdesign.pointsets import icosahedral, uniform
from sphdesign.sht import ncoeffs, synthesis


def test_cap_radius():
    assert cap_radius(64, 27) == pytest.approx(13.84 * 27 / 65**2)
    with pytest.raises(ValueError):
        cap_radius(8, 0)
    assert DEFAULT_LAYERS == {"eta1": 15, "eta2": 22, "eta3": 27}


def test_caps_full_and_empty():
    ico = icosahedral(1)
    full = caps_for_radius(ico, 1.0)
    assert np.all(full.sizes == 12)
    tiny = caps_for_radius(ico, 1e-12)
    # every icosahedron vertex has its antipode in the set
    for k in range(12):
        mem = tiny.members(k)
        assert k in mem and mem.size == 2
        other = mem[mem != k][0]
        assert np.allclose(ico.xyz[other], -ico.xyz[k])


def test_caps_icosahedron_shells():
    # non-antipodal neighbours all sit at sine distance 2/sqrt(5), so caps jump from 2 to 12
    ico = icosahedral(1)
    d = np.linalg.norm(np.cross(ico.xyz[0], ico.xyz), axis=1)
    assert np.allclose(np.unique(np.round(d, 12)), [0.0, 2 / math.sqrt(5)])
    assert np.all(caps_for_radius(ico, 0.5).sizes == 2)
    assert np.all(caps_for_radius(ico, 0.9).sizes == 12)


def test_caps_symmetric_and_self():
    pts = uniform(300, seed=5)
    caps = build_caps(pts, 16, 15)
    members = [set(caps.members(k)) for k in range(len(pts))]
    for k, mk in enumerate(members):
        assert k in mk
        for i in mk:
            assert k in members[i]
    # matches a dense brute-force evaluation
    dense = np.linalg.norm(np.cross(pts.xyz[:, None], pts.xyz[None]), axis=2) <= caps.radius
    assert np.array_equal(caps.sizes, np.maximum(dense.sum(1), 1))


def test_local_soft_hand_value():
    sigma = 0.3
    caps = caps_for_radius(icosahedral(1), 0.0)
    w = np.zeros(12, dtype=complex)
    w[0] = 2 * sigma * np.exp(0.7j)
    # single coefficient per cap: use a cap holding only itself
    from sphdesign.denoise import CapNeighborhoods

    solo = CapNeighborhoods(0.0, np.arange(13), np.arange(12))
    out = local_soft_band(w, 1.0, solo, sigma, c=1.0)
    assert abs(out[0]) == pytest.approx(2 * sigma - sigma / math.sqrt(3), rel=1e-14)
    assert np.angle(out[0]) == pytest.approx(0.7, abs=1e-12)
    assert np.all(out[1:] == 0)
    del caps


def test_local_soft_kills_small_caps():
    pts = uniform(50, seed=2)
    caps = caps_for_radius(pts, 0.5)
    w = np.full(50, 0.1)
    assert not np.any(local_soft_residual(w, caps, sigma=0.2, c1=1.0))


def test_sigma_zero_identity():
    pts = uniform(40, seed=1)
    caps = caps_for_radius(pts, 0.3)
    x = np.random.default_rng(0).normal(size=40)
    assert np.array_equal(local_soft_residual(x, caps, 0.0), x)
    assert np.array_equal(local_soft_band(x, 2.0, caps, 0.0), x)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 2.0), st.floats(0.1, 5.0))
def test_shrinkage_properties(seed, sigma, c):
    rng = np.random.default_rng(seed)
    pts = uniform(60, seed=seed % 1000)
    caps = caps_for_radius(pts, 0.4)
    w = rng.normal(size=60) + 1j * rng.normal(size=60)
    out = local_soft_band(w, 1.3, caps, sigma, c)
    assert np.all(np.abs(out) <= np.abs(w) + 1e-15)
    nz = out != 0
    assert np.allclose(np.angle(out[nz]), np.angle(w[nz]), atol=1e-12)
    bigger_c = local_soft_band(w, 1.3, caps, sigma, 2 * c)
    assert np.all(np.abs(bigger_c) <= np.abs(out) + 1e-15)


def test_snr_and_psnr():
    ref = np.array([1.0, 0, 0, 0])
    assert snr(ref, ref + np.array([0.1, 0, 0, 0])) == pytest.approx(10.0)
    assert snr_power(ref, ref + np.array([0.1, 0, 0, 0])) == pytest.approx(20.0)
    assert snr(ref, 2 * ref) == pytest.approx(0.0)
    assert snr(ref, ref) == math.inf
    assert psnr(np.zeros(4), np.full(4, 255.0)) == pytest.approx(0.0)
    assert psnr(ref, ref) == math.inf


def test_gaussian_noise_seeded():
    a = gaussian_noise(1000, 0.5, 3)
    assert np.array_equal(a, gaussian_noise(1000, 0.5, 3))
    assert abs(a.std() - 0.5) < 0.05


def test_pipeline_identity_at_zero_noise(small_chain, rng):
    t = small_chain.degrees[-2]
    c = rng.normal(size=ncoeffs(t)).astype(complex)
    f = synthesis(c, small_chain.points[-1]).real
    res = denoise_pipeline(f, small_chain, get_bank("eta3"), 0.0)
    assert np.linalg.norm(res.output - f) <= 1e-9 * np.linalg.norm(f)
    assert np.allclose(res.projected + res.residual, f, atol=1e-14)


def test_pipeline_deterministic_and_shape(small_chain):
    pts = small_chain.points[-1]
    f = wendland_field(4, pts, normalized=False)
    noisy = f + gaussian_noise(f.size, 0.05, 1)
    d = Denoiser(small_chain, get_bank("eta2"))
    a, b = d.run(noisy, 0.05), d.run(noisy, 0.05)
    assert np.array_equal(a.output, b.output)
    assert set(a.kill_ratio) == {(j, s) for j in range(2) for s in (1, 2)}
    with pytest.raises(ValueError):
        d.run(noisy[:-1], 0.05)


@pytest.mark.slow
def test_wendland_denoising_on_shipped_chain(shipped_chain):
    f = wendland_field(4, shipped_chain.points[-1], normalized=False)
    sigma = 0.05 * np.abs(f).max()
    noisy = f + gaussian_noise(f.size, sigma, 0)
    out = {b: snr_power(f, denoise_pipeline(noisy, shipped_chain, get_bank(b), sigma).output)
           for b in ("eta1", "eta2", "eta3")}
    assert out["eta3"] >= 23.0
    assert out["eta3"] >= out["eta2"] >= out["eta1"]
