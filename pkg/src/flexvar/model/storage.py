"""
Persistence of PosteriorDraws: one raw little-endian binary file per array
plus a JSON manifest describing dtypes, shapes and metadata.
"""

from pathlib import Path

import numpy as np
import simplejson as json
from loguru import logger

from flexvar.model.consts import (
    DRAWS_FORMAT_VERSION,
    MANIFEST_NAME,
    TIMINGS_KEY,
)
from flexvar.model.core import ModelSpec, PosteriorDraws
from flexvar.model.errors import SpecValidationError


def write_draws(draws: PosteriorDraws, path: Path | str) -> Path:
    """
    Run timings stay out of the manifest so reruns write identical files.

    :param draws: PosteriorDraws
    :param path: output directory (created if needed)
    :return: manifest path
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    arrays = {}
    for name, value in sorted(draws.arrays.items()):
        value = np.ascontiguousarray(value)
        dtype = value.dtype.newbyteorder("<")
        file_name = f"{name}.bin"
        value.astype(dtype, copy=False).tofile(path / file_name)
        arrays[name] = {
            "file": file_name,
            "dtype": dtype.str,
            "shape": list(value.shape),
        }

    manifest = {
        "version": DRAWS_FORMAT_VERSION,
        "spec": draws.spec.model_dump(mode="json"),
        "dates": [str(d) for d in draws.dates],
        "labels": list(draws.labels),
        "metadata": {
            k: v for k, v in draws.metadata.items() if k != TIMINGS_KEY
        },
        "arrays": arrays,
    }
    manifest_path = path / MANIFEST_NAME
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ignore_nan=True)
    )
    logger.debug(f"wrote {len(arrays)} draw arrays to {path}")
    return manifest_path


def read_draws(path: Path | str) -> PosteriorDraws:
    path = Path(path)
    manifest_path = path / MANIFEST_NAME
    if not manifest_path.exists():
        raise SpecValidationError(f"no {MANIFEST_NAME} in {path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecValidationError(str(exc), line=exc.lineno) from exc

    version = manifest.get("version")
    if version != DRAWS_FORMAT_VERSION:
        raise SpecValidationError(
            f"draw format version {version} is not supported "
            f"(expected {DRAWS_FORMAT_VERSION})"
        )

    arrays = {}
    for name, entry in manifest["arrays"].items():
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        value = np.fromfile(path / entry["file"], dtype=dtype)
        if value.size != int(np.prod(shape)):
            raise SpecValidationError(f"array {name} is truncated")
        arrays[name] = value.reshape(shape)

    return PosteriorDraws(
        spec=ModelSpec(**manifest["spec"]),
        dates=np.array(manifest["dates"]),
        labels=tuple(manifest["labels"]),
        arrays=arrays,
        metadata=manifest["metadata"],
    )
