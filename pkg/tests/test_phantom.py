import numpy as np

from masklime.image import rasterize_polygon
from masklime.metrics import load_via_annotations
from masklime.phantom import generate_phantom, write_phantom_set


def _phantom(seed=7, size=128):
    return generate_phantom(size, np.random.default_rng(seed))


class TestGeneratePhantom:
    def test_deterministic(self):
        a = _phantom(seed=3)
        b = _phantom(seed=3)
        assert np.array_equal(a.image, b.image)
        assert np.array_equal(a.tumor_mask, b.tumor_mask)
        assert a.tumor_polygon == b.tumor_polygon

    def test_image_range(self):
        ph = _phantom()
        assert ph.image.dtype == np.float64
        assert ph.image.min() >= 0.0 and ph.image.max() <= 1.0

    def test_tumor_inside_brain(self):
        for seed in range(8):
            ph = _phantom(seed=seed)
            assert ph.tumor_mask.any()
            assert np.all(ph.brain_mask[ph.tumor_mask])

    def test_brain_fraction_sane(self):
        for seed in range(8):
            ph = _phantom(seed=seed)
            frac = np.count_nonzero(ph.brain_mask) / ph.brain_mask.size
            assert 0.05 < frac < 0.95

    def test_bright_pixels_only_in_tumor(self):
        for seed in range(8):
            ph = _phantom(seed=seed)
            bright = ph.image >= 0.8
            assert bright.any()
            assert np.all(ph.tumor_mask[bright])
            # bright area stays a small fraction of the frame
            assert np.count_nonzero(bright) / bright.size < 0.02

    def test_polygon_approximates_tumor(self):
        for seed in range(8):
            ph = _phantom(seed=seed)
            assert len(ph.tumor_polygon) >= 3
            poly = [(float(x), float(y)) for x, y in ph.tumor_polygon]
            size = ph.image.shape[0]
            mask = rasterize_polygon(poly, size, size)
            inter = np.count_nonzero(mask & ph.tumor_mask)
            union = np.count_nonzero(mask | ph.tumor_mask)
            assert inter / union > 0.6


class TestWritePhantomSet:
    def test_files_and_manifest(self, tmp_path):
        names = write_phantom_set(tmp_path, count=3, size=64, seed=1)
        assert names == ["phantom_000.png", "phantom_001.png", "phantom_002.png"]
        for name in names:
            stem = name[: -len(".png")]
            assert (tmp_path / name).exists()
            assert (tmp_path / f"{stem}_brain.png").exists()
            assert (tmp_path / f"{stem}_tumor.png").exists()
        manifest = (tmp_path / "manifest.txt").read_text().splitlines()
        assert manifest == names

    def test_annotations_load_back(self, tmp_path):
        names = write_phantom_set(tmp_path, count=2, size=64, seed=5)
        ann = load_via_annotations(tmp_path / "annotations.json")
        assert sorted(ann) == names
        for polys in ann.values():
            assert len(polys) == 1
            assert len(polys[0]) >= 3

    def test_reproducible_bytes(self, tmp_path):
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        write_phantom_set(a_dir, count=2, size=64, seed=9)
        write_phantom_set(b_dir, count=2, size=64, seed=9)
        for path in sorted(a_dir.iterdir()):
            assert path.read_bytes() == (b_dir / path.name).read_bytes()
