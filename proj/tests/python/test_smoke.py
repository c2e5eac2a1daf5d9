import numpy as np
import pytest

import ordsr


def test_bank_is_orthonormal():
    bank = ordsr.dct_bank()
    assert bank.shape == (64, 8, 8)
    assert np.allclose(bank[0], 1 / 8)
    assert np.abs(ordsr.gram(bank) - np.eye(64)).max() < 1e-10
    value, grad = ordsr.ortho_penalty(bank, 0.0)
    assert abs(value) < 1e-12
    assert grad.shape == bank.shape
    assert ordsr.zigzag(8)[:6] == [(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2)]


def test_analyze_synthesize_roundtrip():
    rng = np.random.default_rng(0)
    img = rng.random((32, 24))
    cube = ordsr.analyze(img)
    assert cube.shape == (64, 4, 3)
    assert np.abs(ordsr.synthesize(cube) - img).max() < 1e-8
    batch = rng.random((2, 16, 16))
    assert ordsr.analyze(batch).shape == (2, 64, 2, 2)
    with pytest.raises(ValueError, match="pad"):
        ordsr.analyze(rng.random((30, 24)))


def test_network_identity_and_io(tmp_path):
    net = ordsr.Network(depth=3, threshold=4, hidden=16, seed=2)
    assert net.parameter_count() == ordsr.parameter_count(3, 4, 16)
    x = np.random.default_rng(1).random((24, 16))
    assert not np.allclose(net.forward(x), x)
    net.zero_cnn()
    assert np.abs(net.forward(x) - x).max() < 1e-8
    assert net.super_resolve(x[:, :13]).shape == (24, 13)
    net.save(str(tmp_path / "m.ckpt"))
    back = ordsr.Network.load(str(tmp_path / "m.ckpt"))
    assert back.depth == 3 and back.threshold == 4
    assert np.array_equal(back.bank, net.bank)
    loss = net.loss(x, x, sigma=0.0, gamma=0.0)
    assert loss["total"] == pytest.approx(0.0, abs=1e-14)


def test_metrics_and_resampling():
    rng = np.random.default_rng(3)
    a = rng.random((20, 20))
    b = a + 16 / 255
    assert ordsr.psnr(b, a) == pytest.approx(20 * np.log10(255 / 16))
    assert ordsr.ssim(a, a) == pytest.approx(1.0)
    assert ordsr.psnr(a, a) == np.inf
    assert ordsr.bicubic_resize(a, 2).shape == (40, 40)
    assert ordsr.resize(a, 7, 9).shape == (7, 9)
    assert np.allclose(ordsr.degrade(np.full((12, 12), 0.4), 3), 0.4)
    with pytest.raises(ValueError):
        ordsr.degrade(a[:, :19], 2)


def test_schedule_and_gradcheck():
    assert ordsr.lr_at(25) == pytest.approx(0.00075)
    assert ordsr.lr_at(50) == pytest.approx(0.0005625)
    report = ordsr.gradcheck(probes=30, bank_probes=10)
    assert report["passed"] and report["groups"]["bank"][0] >= 10
    assert not ordsr.gradcheck(probes=30, bank_probes=10, corrupt=True)["passed"]
