"""
Checkpoint bundles: a JSON manifest plus one MATX file per layer.

Manifest schema::

    {"layers": [{"name": str, "kind": "linear" | "conv" | "bias" | "norm",
                 "shape": [...], "file": str}, ...]}

Conv filters are stored in their raw (C_out, C_in, H, S) order flattened to a
C_out x (C_in*H*S) matrix and reshaped on load. Manifest order is layer order.
"""

import json
import re
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from cogents_core.utils import get_logger
from pydantic import BaseModel, ValidationError

from orthoreg.constants import MANIFEST_FILE
from orthoreg.regularizers.models import LayerKind, LayerSpec
from orthoreg.tensor.reshape import conv_unreshape

from .matx import read_matx, write_matx


logger = get_logger(__name__)

PathLike = Union[str, Path]


class ManifestError(ValueError):
    """Raised when a bundle manifest is missing or malformed."""

    code = 20

    def __init__(self, message: str, path: PathLike = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = str(path)


class ManifestEntry(BaseModel):
    name: str
    kind: LayerKind
    shape: List[int]
    file: str


class Manifest(BaseModel):
    layers: List[ManifestEntry]


def _file_name(index: int, name: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9_.-]", "_", name)
    return f"{index:03d}_{safe}.matx"


def _stored_matrix(layer: LayerSpec) -> np.ndarray:
    if layer.kind == LayerKind.CONV:
        c_out = layer.shape[0]
        return conv_unreshape(layer.weight, layer.shape).reshape(c_out, -1)
    return layer.weight


def save_bundle(layers: Sequence[LayerSpec], directory: PathLike) -> Path:
    """
    Write ``layers`` as a bundle into ``directory``.

    Returns:
        Path of the manifest file
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, layer in enumerate(layers):
        file_name = _file_name(index, layer.name)
        write_matx(_stored_matrix(layer), directory / file_name)
        entries.append(
            ManifestEntry(name=layer.name, kind=layer.kind, shape=list(layer.shape), file=file_name).model_dump(
                mode="json"
            )
        )
    manifest_path = directory / MANIFEST_FILE
    manifest_path.write_text(json.dumps({"layers": entries}, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Saved bundle with {len(entries)} layers to {directory}")
    return manifest_path


def load_bundle(directory: PathLike) -> List[LayerSpec]:
    """
    Load a bundle in manifest order.

    Raises:
        ManifestError: Manifest missing, malformed, or inconsistent with a file
        MatxError: A layer file fails validation
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE if directory.is_dir() else directory
    directory = manifest_path.parent
    if not manifest_path.exists():
        raise ManifestError("manifest not found", manifest_path)
    try:
        manifest = Manifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ManifestError(f"invalid manifest: {e}", manifest_path) from e

    layers: List[LayerSpec] = []
    for entry in manifest.layers:
        layer_path = directory / entry.file
        if not layer_path.exists():
            raise ManifestError(f"layer {entry.name}: file {entry.file} not found", manifest_path)
        stored = read_matx(layer_path)
        shape = tuple(entry.shape)
        try:
            if entry.kind == LayerKind.CONV:
                layers.append(LayerSpec.conv(entry.name, stored.reshape(shape)))
            elif entry.kind == LayerKind.LINEAR:
                if stored.shape != shape:
                    raise ValueError(f"stored shape {stored.shape} != manifest shape {shape}")
                layers.append(LayerSpec.linear(entry.name, stored))
            else:
                layers.append(LayerSpec.vector(entry.name, stored, kind=entry.kind))
        except ValueError as e:
            raise ManifestError(f"layer {entry.name}: {e}", layer_path) from e
    logger.info(f"Loaded bundle with {len(layers)} layers from {directory}")
    return layers


__all__ = ["ManifestError", "load_bundle", "save_bundle"]
