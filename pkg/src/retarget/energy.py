"""Per-pixel energy maps driving the retargeting operators.

Three sources: the gradient formula computed on luminance, a static map
loaded from disk, or an external provider program invoked per image.
The provider protocol is ``<cmd> <input.ppm> <output.pgm>``, exit 0 on
success, output a PGM of identical dimensions.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ProviderFailure
from .raster import ImportanceMap, RasterImage, load_importance, save_image, to_luminance

__all__ = [
    "EnergyProvider",
    "gradient_provider",
    "static_map_provider",
    "command_provider",
    "gradient_energy",
    "energy_for_iteration",
]

GRADIENT = "gradient"
STATIC_MAP = "static-map"
COMMAND = "command"

RECOMPUTE = "recompute-each-iteration"
CARRY = "carry-with-image"


@dataclass(frozen=True)
class EnergyProvider:
    """Where energy comes from and whether it is refreshed per iteration.

    Static maps cannot be regenerated at reduced sizes, so they are
    carried with the image (seam positions deleted in lockstep); the
    gradient and command modes recompute on the current image by default.
    """

    mode: str = GRADIENT
    refresh: str = RECOMPUTE
    command: str | None = None

    def __post_init__(self):
        if self.mode not in (GRADIENT, STATIC_MAP, COMMAND):
            raise ValueError(f"unknown energy mode {self.mode!r}")
        if self.refresh not in (RECOMPUTE, CARRY):
            raise ValueError(f"unknown refresh policy {self.refresh!r}")
        if self.mode == STATIC_MAP and self.refresh != CARRY:
            raise ValueError("static-map energy requires carry-with-image")
        if self.mode == COMMAND and not self.command:
            raise ValueError("command mode needs a provider command")


def gradient_provider() -> EnergyProvider:
    return EnergyProvider(mode=GRADIENT, refresh=RECOMPUTE)


def static_map_provider() -> EnergyProvider:
    return EnergyProvider(mode=STATIC_MAP, refresh=CARRY)


def command_provider(command: str, refresh: str = RECOMPUTE) -> EnergyProvider:
    return EnergyProvider(mode=COMMAND, refresh=refresh, command=command)


def gradient_energy(img: RasterImage) -> ImportanceMap:
    """Sum of absolute forward differences of luminance, scaled to [0, 1].

    The last row/column is replicated, so border differences vanish; the
    maximum raw value is 2*255, hence the /510 normalization.
    """
    lum = to_luminance(img)
    dx = np.zeros_like(lum)
    dy = np.zeros_like(lum)
    dx[:, :-1] = np.abs(lum[:, 1:] - lum[:, :-1])
    dy[:-1, :] = np.abs(lum[1:, :] - lum[:-1, :])
    return ImportanceMap((dx + dy) / 510.0)


def run_provider_command(command: str, img: RasterImage) -> ImportanceMap:
    """Invoke an external provider on one image and read back its map."""
    argv = shlex.split(command)
    with tempfile.TemporaryDirectory(prefix="retarget-energy-") as tmp:
        in_path = os.path.join(tmp, "input.ppm")
        out_path = os.path.join(tmp, "output.pgm")
        save_image(img, in_path)
        try:
            proc = subprocess.run(
                argv + [in_path, out_path],
                capture_output=True,
                text=True,
            )
        except OSError as exc:
            raise ProviderFailure(f"cannot invoke provider {command!r}: {exc}") from exc
        if proc.returncode != 0:
            raise ProviderFailure(
                f"provider {command!r} exited {proc.returncode}: {proc.stderr.strip()}"
            )
        try:
            return load_importance(out_path, expected=(img.width, img.height))
        except (OSError, DimensionMismatch, ValueError) as exc:
            raise ProviderFailure(f"provider {command!r} wrote a bad map: {exc}") from exc


def energy_for_iteration(
    provider: EnergyProvider,
    current: RasterImage,
    carried: ImportanceMap | None = None,
) -> ImportanceMap:
    """Energy map for one retargeting iteration.

    Carry mode returns the map travelling with the image unchanged;
    otherwise the map is recomputed on the current image.
    """
    if provider.refresh == CARRY:
        if carried is None:
            raise DimensionMismatch("carry mode needs a carried map")
        if (carried.width, carried.height) != (current.width, current.height):
            raise DimensionMismatch(
                f"carried map is {carried.width}x{carried.height}, "
                f"image is {current.width}x{current.height}"
            )
        return carried
    if provider.mode == GRADIENT:
        return gradient_energy(current)
    if provider.mode == COMMAND:
        return run_provider_command(provider.command, current)
    raise ValueError(f"cannot recompute energy in mode {provider.mode!r}")
