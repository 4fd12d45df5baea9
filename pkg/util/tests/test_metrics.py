import math

import numpy as np
import pytest

from spad_sim.core.metrics import (
    IntensityImage,
    entropy,
    is_usable,
    ms_ssim,
    ms_ssim_with_scales,
    psnr,
    rms_contrast,
    sharpness,
)
from spad_sim.core.metrics.image_quality import ms_ssim_scales
from spad_sim.errors import DimensionMismatchError, DomainError, ImageFormatError


def _image(values, bit_depth=8):
    return IntensityImage.from_array(np.asarray(values), bit_depth)


def _textured(rng, size=64):
    base = np.cumsum(np.cumsum(rng.normal(size=(size, size)), axis=0), axis=1)
    base = (base - base.min()) / (base.max() - base.min())
    return np.round(base * 255)


def test_rms_contrast():
    assert rms_contrast(_image([[0, 255]])) == pytest.approx(0.5)
    assert rms_contrast(_image(np.full((4, 4), 77))) == 0.0


def test_entropy_examples():
    assert entropy(_image(np.arange(256).reshape(16, 16))) == pytest.approx(8.0)
    assert entropy(_image(np.full((5, 5), 3))) == 0.0
    assert entropy(_image([[0, 0, 9, 9]])) == pytest.approx(1.0)


def test_sharpness_of_a_point_and_a_ramp():
    point = np.zeros((5, 5))
    point[2, 2] = 255
    assert sharpness(_image(point)) == pytest.approx(20.0 / 9.0)

    ramp = np.tile(np.arange(0, 250, 10), (8, 1))
    assert sharpness(_image(ramp)) == pytest.approx(0.0, abs=1e-20)

    with pytest.raises(DomainError):
        sharpness(_image(np.zeros((2, 9))))


def test_ms_ssim_scale_count():
    assert ms_ssim_scales(11, 11) == 1
    assert ms_ssim_scales(22, 40) == 2
    assert ms_ssim_scales(175, 300) == 4
    assert ms_ssim_scales(176, 176) == 5
    assert ms_ssim_scales(1024, 1024) == 5
    with pytest.raises(DomainError):
        ms_ssim_scales(10, 64)


def test_ms_ssim_identity_and_symmetry(rng):
    a = _image(_textured(rng))
    b = _image(np.clip(_textured(rng) + rng.normal(0, 20, size=(64, 64)), 0, 255).round())
    assert ms_ssim(a, a) == 1.0
    assert ms_ssim(a, b) == ms_ssim(b, a)
    assert 0.0 <= ms_ssim(a, b) < 1.0


def test_ms_ssim_drops_with_noise(rng):
    clean = _textured(rng)
    slight = np.clip(clean + rng.normal(0, 5, size=clean.shape), 0, 255).round()
    heavy = np.clip(clean + rng.normal(0, 60, size=clean.shape), 0, 255).round()
    value_slight, scales = ms_ssim_with_scales(_image(slight), _image(clean))
    assert scales == 3
    assert value_slight > ms_ssim(_image(heavy), _image(clean))


def test_ms_ssim_needs_matching_shapes(rng):
    with pytest.raises(DimensionMismatchError):
        ms_ssim(_image(np.zeros((32, 32))), _image(np.zeros((32, 33))))


def test_psnr():
    zeros = _image(np.zeros((8, 8)), 16)
    assert psnr(zeros, zeros) == math.inf
    offset = _image(np.full((8, 8), 6554), 16)
    assert psnr(offset, zeros) == pytest.approx(20.0, abs=1e-2)
    with pytest.raises(DimensionMismatchError):
        psnr(zeros, _image(np.zeros((8, 9)), 16))


def test_usable_images():
    assert not is_usable(_image(np.zeros((4, 4))))
    assert not is_usable(_image(np.full((4, 4), 255)))
    assert is_usable(_image([[0, 255], [255, 255]]))


def test_intensity_image_validation(tmp_path):
    with pytest.raises(DomainError):
        _image([[256]])
    with pytest.raises(DomainError):
        IntensityImage.from_array([[1]], 17)

    img = _image([[1, 2], [3, 4]], 12)
    img.save_pgm(tmp_path / "a.pgm")
    loaded = IntensityImage.load_pgm(tmp_path / "a.pgm")
    assert loaded.bit_depth == 12
    np.testing.assert_array_equal(loaded.samples, img.samples)

    (tmp_path / "odd.pgm").write_bytes(b"P5\n1 1\n1000\n\x00\x05")
    with pytest.raises(ImageFormatError):
        IntensityImage.load_pgm(tmp_path / "odd.pgm")


def _halve(a):
    rows, cols = len(a) // 2, len(a[0]) // 2
    return [
        [(a[2 * r][2 * c] + a[2 * r + 1][2 * c] + a[2 * r][2 * c + 1] + a[2 * r + 1][2 * c + 1]) / 4 for c in range(cols)]
        for r in range(rows)
    ]


def _reference_ms_ssim(test, reference, scales):
    """Window-by-window MS-SSIM on plain nested loops, for cross-checking the vectorized metric."""
    radius = 5
    taps = [math.exp(-(k * k) / (2 * 1.5 * 1.5)) for k in range(-radius, radius + 1)]
    norm = sum(taps)
    window = [[a * b / (norm * norm) for b in taps] for a in taps]
    weights = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333][:scales]
    weights = [w / sum(weights) for w in weights]
    c1, c2 = 0.01**2, 0.03**2

    x = [[float(v) for v in row] for row in test]
    y = [[float(v) for v in row] for row in reference]
    value = 1.0
    for level in range(scales):
        h, w = len(x), len(x[0])
        lum_sum = cs_sum = 0.0
        positions = 0
        for top in range(h - 2 * radius):
            for left in range(w - 2 * radius):
                mx = my = mxx = myy = mxy = 0.0
                for i in range(2 * radius + 1):
                    for j in range(2 * radius + 1):
                        g = window[i][j]
                        a, b = x[top + i][left + j], y[top + i][left + j]
                        mx += g * a
                        my += g * b
                        mxx += g * a * a
                        myy += g * b * b
                        mxy += g * a * b
                vx, vy, cov = mxx - mx * mx, myy - my * my, mxy - mx * my
                lum_sum += (2 * mx * my + c1) / (mx * mx + my * my + c1)
                cs_sum += (2 * cov + c2) / (vx + vy + c2)
                positions += 1
        lum, cs = lum_sum / positions, max(cs_sum / positions, 0.0)
        if level == scales - 1:
            value *= max(lum * cs, 0.0) ** weights[level]
        else:
            value *= cs ** weights[level]
            x, y = _halve(x), _halve(y)
    return min(value, 1.0)


def _with_noise(clean, sigma, z):
    return np.round(np.clip(clean / 255 + sigma * z, 0, 1) * 65535)


def test_quadrant_inversion_scores_below_slight_noise(rng):
    clean = _textured(rng, size=48)
    inverted = clean.copy()
    inverted[:24, :24] = 255 - inverted[:24, :24]
    noisy = np.clip(clean + 0.01 * 255 * rng.normal(size=clean.shape), 0, 255).round()

    reference = _image(clean)
    value_inverted, scales = ms_ssim_with_scales(_image(inverted), reference)
    value_noisy = ms_ssim(_image(noisy), reference)
    assert scales == 3

    expected_inverted = _reference_ms_ssim(inverted / 255, clean / 255, scales)
    expected_noisy = _reference_ms_ssim(noisy / 255, clean / 255, scales)
    assert value_inverted == pytest.approx(expected_inverted, rel=1e-9)
    assert value_noisy == pytest.approx(expected_noisy, rel=1e-9)
    assert value_inverted < value_noisy


def test_ms_ssim_decreases_with_each_noise_level(rng):
    clean = _textured(rng, size=128)
    z = rng.normal(size=clean.shape)
    reference = _image(_with_noise(clean, 0.0, z), 16)

    values = [ms_ssim(_image(_with_noise(clean, sigma, z), 16), reference) for sigma in (0.01, 0.02, 0.05)]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert values[0] > values[1] > values[2]


@pytest.mark.parametrize("turn", [np.transpose, lambda a: np.rot90(a, 2)], ids=["transpose", "rotate180"])
def test_metrics_ignore_transposition_and_half_turns(rng, turn):
    clean = _textured(rng)
    noisy = np.clip(clean + rng.normal(0, 8, size=clean.shape), 0, 255).round()
    a, b = _image(noisy), _image(clean)
    ta, tb = _image(turn(noisy)), _image(turn(clean))

    assert entropy(ta) == entropy(a)
    assert rms_contrast(ta) == pytest.approx(rms_contrast(a), rel=1e-12)
    assert sharpness(ta) == pytest.approx(sharpness(a), rel=1e-12)
    assert ms_ssim(ta, tb) == pytest.approx(ms_ssim(a, b), rel=1e-12)
