"""Corpus IO: synthetic scenes, PNG round-trips, palettes, validation."""

import os

import numpy as np
import pytest
from PIL import Image

from cainet.data import (Corpus, DataError, DatasetManifest, LabelRangeError,
                         MissingFileError, SegSample, SizeMismatchError,
                         class_temperature, colorize, inverse_colorize,
                         load_corpus, load_manifest, load_sample,
                         make_palette, save_corpus, synth_scene)


# -- synthetic scenes ---------------------------------------------------------------

def test_synth_deterministic():
    a = synth_scene(42, 32, 32, 3)
    b = synth_scene(42, 32, 32, 3)
    assert np.array_equal(a.rgb, b.rgb)
    assert np.array_equal(a.thermal, b.thermal)
    assert np.array_equal(a.labels, b.labels)
    assert a.id == "00000042"


def test_synth_label_range_and_extents():
    s = synth_scene(0, 32, 32, 3)
    assert s.rgb.shape == (3, 32, 32)
    assert s.thermal.shape == (1, 32, 32)
    assert s.labels.shape == (32, 32)
    assert set(np.unique(s.labels)) <= {0, 1, 2}
    assert s.rgb.min() >= 0.0 and s.rgb.max() <= 1.0
    assert s.thermal.min() >= 0.0 and s.thermal.max() <= 1.0


def test_synth_class_count_bounds():
    with pytest.raises(DataError, match="classes"):
        synth_scene(0, 16, 16, 1)
    with pytest.raises(DataError, match="classes"):
        synth_scene(0, 16, 16, 20)


def test_class_temperatures_separate_classes():
    temps = [class_temperature(c, 4) for c in range(4)]
    assert temps[0] < min(temps[1:]) - 0.1   # background clearly colder
    assert len(set(np.round(temps, 3))) == 4


def test_thermal_alone_separates_classes_when_rgb_dark():
    """A nearest-temperature classifier on the thermal channel must clear
    90% pixel accuracy even with RGB darkened to 5%."""
    correct = total = 0
    for seed in range(12):
        s = synth_scene(seed, 32, 32, 3, darken_rgb=0.05)
        assert s.rgb.max() <= 0.06             # darkening really applied
        temps = np.array([class_temperature(c, 3) for c in range(3)])
        pred = np.argmin(
            np.abs(s.thermal[0][None] - temps[:, None, None]), axis=0)
        correct += int((pred == s.labels).sum())
        total += s.labels.size
    assert correct / total > 0.90


def test_flipped_mirrors_everything():
    s = synth_scene(7, 16, 16, 3)
    f = s.flipped()
    assert np.array_equal(f.rgb, s.rgb[:, :, ::-1])
    assert np.array_equal(f.thermal, s.thermal[:, :, ::-1])
    assert np.array_equal(f.labels, s.labels[:, ::-1])
    assert f.id.endswith("~flip")


# -- palette ------------------------------------------------------------------------

def test_palette_distinct_and_black_background():
    pal = make_palette(9)
    assert pal.shape == (9, 3)
    assert (pal[0] == 0).all()
    assert len({tuple(c) for c in pal}) == 9


def test_colorize_background_only():
    pal = make_palette(3)
    img = colorize(np.zeros((4, 4), dtype=int), pal)
    assert img.shape == (3, 4, 4)
    assert not img.any()


def test_colorize_round_trip():
    pal = make_palette(5)
    labels = np.random.default_rng(0).integers(0, 5, (6, 6))
    assert np.array_equal(inverse_colorize(colorize(labels, pal), pal),
                          labels)


def test_colorize_unknown_class():
    pal = make_palette(3)
    with pytest.raises(DataError, match="palette"):
        colorize(np.array([[4]]), pal)
    with pytest.raises(DataError, match="negative"):
        colorize(np.array([[-1]]), pal)


def test_inverse_colorize_unknown_color():
    pal = make_palette(3)
    img = np.full((3, 2, 2), 7, dtype=np.uint8)
    with pytest.raises(DataError, match="not in palette"):
        inverse_colorize(img, pal)


# -- manifests ----------------------------------------------------------------------

def test_manifest_rejects_overlapping_splits():
    with pytest.raises(DataError, match="both"):
        DatasetManifest(num_classes=3,
                        splits={"train": ["a", "b"], "val": ["b"]})


def test_manifest_rejects_unknown_layout():
    with pytest.raises(DataError, match="layout"):
        DatasetManifest(num_classes=3, layout="stacked")


def test_manifest_default_class_names():
    m = DatasetManifest(num_classes=3)
    assert m.class_names == ["class0", "class1", "class2"]


# -- save / load round trip ------------------------------------------------------------

@pytest.mark.parametrize("layout", ["paired", "rgbt"])
def test_round_trip_bit_exact(tmp_path, layout):
    corpus = Corpus.synthetic(3, (16, 16), {"train": 2, "val": 1},
                              seed=3, layout=layout)
    root = tmp_path / "corpus"
    save_corpus(corpus, root)
    again = load_corpus(root)
    assert again.num_classes == 3
    assert again.manifest.layout == layout
    for split in ("train", "val"):
        originals = corpus.split(split)
        loaded = again.split(split)
        assert [s.id for s in loaded] == [s.id for s in originals]
        for a, b in zip(originals, loaded):
            assert np.array_equal(a.rgb, b.rgb)
            assert np.array_equal(a.thermal, b.thermal)
            assert np.array_equal(a.labels, b.labels)


def test_load_is_pure(tmp_path):
    corpus = Corpus.synthetic(3, (16, 16), {"train": 1}, seed=5)
    root = tmp_path / "corpus"
    save_corpus(corpus, root)
    before = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            p = os.path.join(dirpath, f)
            before[p] = open(p, "rb").read()
    load_corpus(root)
    for p, blob in before.items():
        assert open(p, "rb").read() == blob


def test_manifest_missing(tmp_path):
    with pytest.raises(MissingFileError, match="manifest"):
        load_manifest(tmp_path / "nope")


def test_manifest_requires_class_count(tmp_path):
    (tmp_path / "manifest.txt").write_text("train a\n")
    with pytest.raises(DataError, match="classes"):
        load_manifest(tmp_path)


def test_manifest_rejects_malformed_line(tmp_path):
    (tmp_path / "manifest.txt").write_text("# classes 3\ntrain a b c\n")
    with pytest.raises(DataError, match="bad manifest line"):
        load_manifest(tmp_path)


# -- sample-level validation -------------------------------------------------------------

def _tiny_corpus(tmp_path, **kwargs):
    corpus = Corpus.synthetic(3, (16, 16), {"train": 1}, seed=9, **kwargs)
    root = tmp_path / "corpus"
    save_corpus(corpus, root)
    return root, corpus.split("train")[0].id


def test_missing_image_file(tmp_path):
    root, sid = _tiny_corpus(tmp_path)
    manifest = load_manifest(root)
    os.remove(root / "images" / f"{sid}_th.png")
    with pytest.raises(MissingFileError, match="_th.png"):
        load_sample(root, sid, manifest)


def test_label_out_of_range_names_pixel(tmp_path):
    root, sid = _tiny_corpus(tmp_path)
    manifest = load_manifest(root)
    lab_path = root / "labels" / f"{sid}.png"
    arr = np.asarray(Image.open(lab_path)).copy()
    arr[2, 5] = 9
    Image.fromarray(arr, mode="L").save(lab_path)
    with pytest.raises(LabelRangeError, match=r"9 at pixel \(2, 5\)"):
        load_sample(root, sid, manifest)


def test_size_mismatch_detected(tmp_path):
    root, sid = _tiny_corpus(tmp_path)
    manifest = load_manifest(root)
    lab_path = root / "labels" / f"{sid}.png"
    Image.fromarray(np.zeros((8, 8), dtype=np.uint8), mode="L").save(lab_path)
    with pytest.raises(SizeMismatchError, match="share extents"):
        load_sample(root, sid, manifest)


def test_error_types_are_distinct():
    assert issubclass(MissingFileError, DataError)
    assert issubclass(LabelRangeError, DataError)
    assert issubclass(SizeMismatchError, DataError)
    assert len({MissingFileError, LabelRangeError, SizeMismatchError}) == 3


# -- corpus construction --------------------------------------------------------------------

def test_synthetic_corpus_counts_and_disjoint_ids():
    corpus = Corpus.synthetic(3, (16, 16), {"train": 4, "val": 2, "test": 1},
                              seed=1)
    assert len(corpus.split("train")) == 4
    assert len(corpus.split("val")) == 2
    assert len(corpus.split("test")) == 1
    assert corpus.split("extra") == []
    ids = [s.id for split in ("train", "val", "test")
           for s in corpus.split(split)]
    assert len(set(ids)) == 7


def test_synthetic_corpus_is_seed_stable():
    a = Corpus.synthetic(3, (16, 16), {"train": 2}, seed=11)
    b = Corpus.synthetic(3, (16, 16), {"train": 2}, seed=11)
    for sa, sb in zip(a.split("train"), b.split("train")):
        assert sa.id == sb.id
        assert np.array_equal(sa.rgb, sb.rgb)
