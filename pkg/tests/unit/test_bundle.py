import json
import os
import tempfile
from pathlib import Path

import numpy as np
import pytest

from orthoreg.regularizers import LayerKind, LayerSpec, RegularizerConfig, or_loss
from orthoreg.storage import ManifestError, MatxError, load_bundle, read_matx, save_bundle
from orthoreg.tensor import conv_unreshape


class TestBundle:
    """Checkpoint bundles: manifest plus one MATX file per layer."""

    @pytest.fixture
    def temp_dir(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            yield tmpdir

    @pytest.fixture
    def layers(self):
        rng = np.random.default_rng(0)
        return [
            LayerSpec.conv("encoder.conv0.weight", rng.standard_normal((4, 2, 3, 2))),
            LayerSpec.vector("encoder.conv0.bias", rng.standard_normal(4)),
            LayerSpec.linear("encoder.fc0.weight", rng.standard_normal((8, 5))),
            LayerSpec.vector("encoder.bn0.scale", np.ones(5), kind=LayerKind.NORM),
        ]

    @pytest.mark.unit
    def test_save_and_load_preserve_layers(self, temp_dir, layers):
        """Test names, kinds, shapes and exact weights survive in manifest order."""
        save_bundle(layers, temp_dir)
        loaded = load_bundle(temp_dir)
        assert [layer.name for layer in loaded] == [layer.name for layer in layers]
        for original, restored in zip(layers, loaded):
            assert restored.kind == original.kind
            assert restored.shape == original.shape
            np.testing.assert_array_equal(restored.weight, original.weight)

    @pytest.mark.unit
    def test_or_loss_unchanged_after_reload(self, temp_dir, layers):
        """Test that reloading gives the same SO and SRIP penalties."""
        save_bundle(layers, temp_dir)
        loaded = load_bundle(os.path.join(temp_dir, "manifest.json"))
        for kind in ("so", "srip"):
            cfg = RegularizerConfig(kind=kind, gamma=1.0)
            assert or_loss(loaded, cfg, step=3) == or_loss(layers, cfg, step=3)

    @pytest.mark.unit
    def test_conv_stored_in_raw_order(self, temp_dir, layers):
        """Test the conv file holds C_out x (C_in*H*S) in raw filter order."""
        save_bundle(layers, temp_dir)
        manifest = json.loads(Path(os.path.join(temp_dir, "manifest.json")).read_text())
        entry = manifest["layers"][0]
        assert entry["kind"] == "conv"
        assert entry["shape"] == [4, 2, 3, 2]
        stored = read_matx(os.path.join(temp_dir, entry["file"]))
        raw = conv_unreshape(layers[0].weight, (4, 2, 3, 2))
        np.testing.assert_array_equal(stored, raw.reshape(4, -1))

    @pytest.mark.unit
    def test_missing_manifest(self, temp_dir):
        """Test that a directory without manifest is rejected."""
        with pytest.raises(ManifestError) as excinfo:
            load_bundle(temp_dir)
        assert excinfo.value.code == 20

    @pytest.mark.unit
    def test_malformed_manifest(self, temp_dir):
        """Test a manifest that does not follow the schema."""
        with open(os.path.join(temp_dir, "manifest.json"), "w") as f:
            f.write('{"layers": [{"name": "x"}]}')
        with pytest.raises(ManifestError):
            load_bundle(temp_dir)

    @pytest.mark.unit
    def test_missing_layer_file(self, temp_dir, layers):
        """Test that a manifest entry without its file is rejected."""
        save_bundle(layers, temp_dir)
        manifest = json.loads(Path(os.path.join(temp_dir, "manifest.json")).read_text())
        os.remove(os.path.join(temp_dir, manifest["layers"][2]["file"]))
        with pytest.raises(ManifestError, match="encoder.fc0.weight"):
            load_bundle(temp_dir)

    @pytest.mark.unit
    def test_shape_mismatch(self, temp_dir, layers):
        """Test that a manifest shape disagreeing with its file is rejected."""
        save_bundle(layers, temp_dir)
        path = os.path.join(temp_dir, "manifest.json")
        manifest = json.loads(Path(path).read_text())
        manifest["layers"][2]["shape"] = [5, 8]
        with open(path, "w") as f:
            json.dump(manifest, f)
        with pytest.raises(ManifestError):
            load_bundle(temp_dir)

    @pytest.mark.unit
    def test_corrupted_layer_file(self, temp_dir, layers):
        """Test that MATX validation errors propagate with the file path."""
        save_bundle(layers, temp_dir)
        manifest = json.loads(Path(os.path.join(temp_dir, "manifest.json")).read_text())
        path = os.path.join(temp_dir, manifest["layers"][0]["file"])
        data = bytearray(Path(path).read_bytes())
        data[-1] ^= 0x01
        with open(path, "wb") as f:
            f.write(bytes(data))
        with pytest.raises(MatxError) as excinfo:
            load_bundle(temp_dir)
        assert manifest["layers"][0]["file"] in excinfo.value.path
