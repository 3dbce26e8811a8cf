import os
import stat

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retarget import (
    CARRY,
    EnergyProvider,
    ImportanceMap,
    ProviderFailure,
    RasterImage,
    command_provider,
    energy_for_iteration,
    gradient_energy,
    gradient_provider,
    run_provider_command,
    static_map_provider,
)
from retarget.energy import GRADIENT, STATIC_MAP
from retarget.raster import to_luminance

from .conftest import random_image


def stencil_oracle(img):
    """Straight-loop forward-difference gradient, replicated last row/col."""
    lum = to_luminance(img)
    h, w = lum.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            xn = min(x + 1, w - 1)
            yn = min(y + 1, h - 1)
            out[y, x] = abs(lum[y, xn] - lum[y, x]) + abs(lum[yn, x] - lum[y, x])
    return out / 510.0


def gray(levels):
    """Image whose luminance equals the given grid exactly (R=G=B)."""
    g = np.asarray(levels, dtype=np.uint8)
    return RasterImage(np.repeat(g[:, :, None], 3, axis=2))


def test_constant_image_zero_energy():
    img = gray(np.full((4, 4), 77))
    assert np.all(gradient_energy(img).values == 0.0)


def test_two_column_hand_case():
    img = gray([[0, 10], [0, 10]])
    e = gradient_energy(img).values * 510.0
    assert np.allclose(e, [[10.0, 0.0], [10.0, 0.0]])


def test_random_image_matches_stencil_oracle(rng):
    img = random_image(rng, 8, 8)
    assert np.array_equal(gradient_energy(img).values, stencil_oracle(img))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.integers(1, 7))
def test_energy_dimensions_match(seed, w, h):
    rng = np.random.default_rng(seed)
    img = random_image(rng, w, h)
    e = gradient_energy(img)
    assert (e.width, e.height) == (w, h)


def test_translation_equivariance_interior():
    rng = np.random.default_rng(11)
    pattern = rng.integers(0, 256, size=(6, 6), dtype=np.uint8)
    a = np.zeros((12, 12), dtype=np.uint8)
    b = np.zeros((12, 12), dtype=np.uint8)
    a[3:9, 2:8] = pattern
    b[3:9, 3:9] = pattern
    ea = gradient_energy(gray(a)).values
    eb = gradient_energy(gray(b)).values
    assert np.array_equal(ea[3:8, 2:7], eb[3:8, 3:8])


def test_gradient_mode_delegates(rng):
    img = random_image(rng, 5, 4)
    out = energy_for_iteration(gradient_provider(), img)
    assert np.array_equal(out.values, gradient_energy(img).values)


def test_carry_mode_returns_carried(rng):
    img = random_image(rng, 5, 4)
    m = ImportanceMap(rng.random((4, 5)))
    assert energy_for_iteration(static_map_provider(), img, m) is m


def test_static_map_requires_carry():
    with pytest.raises(ValueError):
        EnergyProvider(STATIC_MAP, "recompute-each-iteration")


def test_command_needs_program():
    with pytest.raises(ValueError):
        EnergyProvider("command", CARRY, None)


def _write_script(path, body):
    path.write_text("#!/usr/bin/env python3\n" + body)
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path)


def test_command_provider_round_trip(tmp_path, rng):
    script = _write_script(
        tmp_path / "prov.py",
        "import sys\n"
        "src, dst = sys.argv[1], sys.argv[2]\n"
        "data = open(src, 'rb').read()\n"
        "head, rest = data.split(b'255\\n', 1)\n"
        "dims = head.split()[1:3]\n"
        "w, h = int(dims[0]), int(dims[1])\n"
        "gray = bytes(max(rest[3 * i:3 * i + 3]) for i in range(w * h))\n"
        "open(dst, 'wb').write(b'P5\\n%d %d\\n255\\n' % (w, h) + gray)\n",
    )
    img = random_image(rng, 6, 5)
    out = run_provider_command(f"python3 {script}", img)
    expect = img.pixels.max(axis=2).astype(np.float64) / 255.0
    assert np.allclose(out.values, expect)


def test_command_provider_wrong_size_fails(tmp_path, rng):
    script = _write_script(
        tmp_path / "bad.py",
        "import sys\nopen(sys.argv[2], 'wb').write(b'P5\\n1 1\\n255\\n\\x00')\n",
    )
    img = random_image(rng, 6, 5)
    with pytest.raises(ProviderFailure):
        run_provider_command(f"python3 {script}", img)


def test_command_provider_nonzero_exit_fails(rng):
    img = random_image(rng, 3, 3)
    with pytest.raises(ProviderFailure):
        run_provider_command("false", img)


def test_command_mode_invokes_program(tmp_path, rng):
    script = _write_script(
        tmp_path / "flat.py",
        "import sys\n"
        "data = open(sys.argv[1], 'rb').read()\n"
        "head, rest = data.split(b'255\\n', 1)\n"
        "w, h = (int(t) for t in head.split()[1:3])\n"
        "open(sys.argv[2], 'wb').write(b'P5\\n%d %d\\n255\\n' % (w, h) + b'\\x80' * (w * h))\n",
    )
    img = random_image(rng, 4, 3)
    provider = command_provider(f"python3 {script}")
    out = energy_for_iteration(provider, img)
    assert np.allclose(out.values, 128 / 255.0)
