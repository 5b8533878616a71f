"""Corpus IO: paired RGB/thermal PNG layout, manifests, a deterministic
synthetic scene generator, and prediction colorization.

Directory layout:

    root/images/<id>.png          RGB (paired layout) or RGBA with thermal
                                  in the alpha plane (rgbt layout)
    root/images/<id>_th.png       8-bit thermal (paired layout only)
    root/labels/<id>.png          8-bit class indices
    root/manifest.txt             '# key value' metadata lines, then one
                                  '<split> <id>' line per sample

Values are normalized by /255 only. The synthetic generator quantizes to
the same 8-bit grid the PNG writer uses, so generate -> save -> load
round-trips bit-exactly.

Synthetic scenes: colored geometric objects on a textured background. Each
class has a distinctive color AND a distinctive thermal temperature, so the
thermal channel alone carries class-discriminative signal — darkening the
RGB channels leaves the scene separable. That property is what the
thermal-complement acceptance check trains against.
"""

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image


class DataError(ValueError):
    """Corpus-level problem (file layout, labels, extents)."""


class MissingFileError(DataError):
    pass


class LabelRangeError(DataError):
    pass


class SizeMismatchError(DataError):
    pass


@dataclass
class SegSample:
    id: str
    rgb: np.ndarray        # (3, H, W) float32 in [0, 1]
    thermal: np.ndarray    # (1, H, W) float32 in [0, 1]
    labels: np.ndarray     # (H, W) int32 in [0, k]

    def flipped(self):
        """Horizontal mirror (the only augmentation)."""
        return SegSample(self.id + "~flip",
                         self.rgb[:, :, ::-1].copy(),
                         self.thermal[:, :, ::-1].copy(),
                         self.labels[:, ::-1].copy())


@dataclass
class DatasetManifest:
    num_classes: int
    layout: str = "paired"             # paired | rgbt
    class_names: list = None
    splits: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.layout not in ("paired", "rgbt"):
            raise DataError(f"unknown layout {self.layout!r}")
        if self.class_names is None:
            self.class_names = [f"class{i}" for i in range(self.num_classes)]
        seen = {}
        for split, ids in self.splits.items():
            for i in ids:
                if i in seen:
                    raise DataError(f"sample {i!r} appears in both "
                                    f"{seen[i]!r} and {split!r} splits")
                seen[i] = split


def make_palette(num_classes):
    """Distinct (num_classes, 3) uint8 colors; index 0 is black."""
    pal = np.zeros((num_classes, 3), dtype=np.uint8)
    for i in range(num_classes):
        c, r, g, b = i, 0, 0, 0
        for j in range(8):
            r |= ((c >> 0) & 1) << (7 - j)
            g |= ((c >> 1) & 1) << (7 - j)
            b |= ((c >> 2) & 1) << (7 - j)
            c >>= 3
        pal[i] = (r, g, b)
    return pal


def colorize(pred_labels, palette):
    """Palette lookup -> (3, H, W) uint8 image."""
    labels = np.asarray(pred_labels)
    if labels.size and labels.max() >= len(palette):
        raise DataError(f"class id {int(labels.max())} has no palette entry "
                        f"(palette covers 0..{len(palette) - 1})")
    if labels.size and labels.min() < 0:
        raise DataError("negative class id cannot be colorized")
    return palette[labels].transpose(2, 0, 1).copy()


def inverse_colorize(image, palette):
    """Recover labels from a colorized image; inverse of ``colorize``."""
    img = np.asarray(image).transpose(1, 2, 0)
    lut = {tuple(color): i for i, color in enumerate(palette)}
    out = np.empty(img.shape[:2], dtype=np.int32)
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            key = tuple(img[y, x])
            if key not in lut:
                raise DataError(f"color {key} at {(y, x)} not in palette")
            out[y, x] = lut[key]
    return out


# ---------------------------------------------------------------------------
# synthetic scenes

# Distinct surface colors for foreground classes 1..15 (background uses a
# muted textured tone drawn per scene).
_CLASS_COLORS = np.array([
    [0.80, 0.15, 0.15],   # red
    [0.15, 0.25, 0.85],   # blue
    [0.90, 0.80, 0.15],   # yellow
    [0.80, 0.20, 0.80],   # magenta
    [0.15, 0.80, 0.75],   # cyan
    [0.90, 0.50, 0.10],   # orange
    [0.45, 0.20, 0.70],   # violet
    [0.95, 0.95, 0.95],   # white
    [0.20, 0.60, 0.20],   # green
    [0.60, 0.40, 0.20],   # brown
    [0.95, 0.60, 0.70],   # pink
    [0.40, 0.55, 0.65],   # steel
    [0.70, 0.90, 0.30],   # lime
    [0.30, 0.30, 0.30],   # dark gray
    [0.55, 0.80, 0.95],   # sky
])

_BG_TEMP = 0.15


def class_temperature(cls, num_classes):
    """Thermal value for a class: evenly spaced, well above background."""
    if cls == 0:
        return _BG_TEMP
    span = max(num_classes - 2, 1)
    return 0.40 + 0.50 * (cls - 1) / span


def _quantize(x):
    """Snap to the 8-bit grid exactly as the PNG round-trip computes it."""
    u8 = np.round(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)
    return u8.astype(np.float32) / np.float32(255.0)


def synth_scene(seed, h, w, num_classes, darken_rgb=1.0) -> SegSample:
    """Deterministic scene of colored, warm geometric objects."""
    if num_classes < 2 or num_classes - 1 > len(_CLASS_COLORS):
        raise DataError(f"synthetic scenes support 2..{len(_CLASS_COLORS) + 1}"
                        f" classes, got {num_classes}")
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.30, 0.50)
    texture = rng.normal(0.0, 0.03, (h, w))
    rgb = np.empty((3, h, w), dtype=np.float64)
    for ch, tone in enumerate((0.90, 1.00, 0.85)):
        rgb[ch] = base * tone + texture + rng.normal(0.0, 0.015, (h, w))
    thermal = _BG_TEMP + rng.normal(0.0, 0.02, (h, w))
    labels = np.zeros((h, w), dtype=np.int32)

    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(int(rng.integers(3, 6))):
        cls = int(rng.integers(1, num_classes))
        cy = rng.uniform(0.15, 0.85) * h
        cx = rng.uniform(0.15, 0.85) * w
        if rng.integers(0, 2) == 0:
            r = rng.uniform(0.10, 0.22) * min(h, w)
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        else:
            rh = rng.uniform(0.08, 0.20) * h
            rw = rng.uniform(0.08, 0.20) * w
            mask = (np.abs(yy - cy) <= rh) & (np.abs(xx - cx) <= rw)
        color = _CLASS_COLORS[cls - 1] + rng.normal(0.0, 0.04, 3)
        count = int(mask.sum())
        rgb[:, mask] = color[:, None] + rng.normal(0.0, 0.02, (3, count))
        thermal[mask] = (class_temperature(cls, num_classes)
                         + rng.normal(0.0, 0.015)
                         + rng.normal(0.0, 0.01, count))
        labels[mask] = cls

    rgb = _quantize(rgb * darken_rgb)
    thermal = _quantize(thermal)[None]
    return SegSample(id=f"{seed:08d}", rgb=rgb, thermal=thermal, labels=labels)


# ---------------------------------------------------------------------------
# corpus


@dataclass
class Corpus:
    manifest: DatasetManifest
    samples: dict                      # split -> list[SegSample]

    @property
    def num_classes(self):
        return self.manifest.num_classes

    def split(self, name):
        return self.samples.get(name, [])

    @staticmethod
    def synthetic(num_classes, size, counts, seed=0, darken_rgb=1.0,
                  layout="paired"):
        """counts: dict like {"train": 64, "val": 16, "test": 8}."""
        h, w = size
        samples, splits = {}, {}
        offset = 0
        for split in ("train", "val", "test"):
            n = counts.get(split, 0)
            samples[split] = [
                synth_scene(seed * 1_000_003 + offset + i, h, w, num_classes,
                            darken_rgb)
                for i in range(n)]
            splits[split] = [s.id for s in samples[split]]
            offset += n
        manifest = DatasetManifest(num_classes=num_classes, layout=layout,
                                   splits=splits)
        return Corpus(manifest=manifest, samples=samples)


def save_corpus(corpus: Corpus, root):
    os.makedirs(os.path.join(root, "images"), exist_ok=True)
    os.makedirs(os.path.join(root, "labels"), exist_ok=True)
    m = corpus.manifest
    lines = [f"# classes {m.num_classes}",
             f"# layout {m.layout}",
             f"# names {','.join(m.class_names)}"]
    for split in ("train", "val", "test"):
        for s in corpus.split(split):
            _save_sample(root, s, m.layout)
            lines.append(f"{split} {s.id}")
    with open(os.path.join(root, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _save_sample(root, s: SegSample, layout):
    rgb8 = np.round(s.rgb * 255.0).astype(np.uint8).transpose(1, 2, 0)
    th8 = np.round(s.thermal[0] * 255.0).astype(np.uint8)
    if layout == "rgbt":
        rgba = np.dstack([rgb8, th8])
        Image.fromarray(rgba, mode="RGBA").save(
            os.path.join(root, "images", f"{s.id}.png"))
    else:
        Image.fromarray(rgb8, mode="RGB").save(
            os.path.join(root, "images", f"{s.id}.png"))
        Image.fromarray(th8, mode="L").save(
            os.path.join(root, "images", f"{s.id}_th.png"))
    Image.fromarray(s.labels.astype(np.uint8), mode="L").save(
        os.path.join(root, "labels", f"{s.id}.png"))


def load_manifest(root) -> DatasetManifest:
    path = os.path.join(root, "manifest.txt")
    if not os.path.exists(path):
        raise MissingFileError(f"no manifest at {path}")
    meta = {"classes": None, "layout": "paired", "names": None}
    splits = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split(None, 1)
                if len(parts) == 2 and parts[0] in meta:
                    meta[parts[0]] = parts[1]
                continue
            try:
                split, sid = line.split()
            except ValueError:
                raise DataError(f"bad manifest line {line!r}")
            splits.setdefault(split, []).append(sid)
    if meta["classes"] is None:
        raise DataError("manifest is missing the '# classes N' line")
    names = meta["names"].split(",") if meta["names"] else None
    return DatasetManifest(num_classes=int(meta["classes"]),
                           layout=meta["layout"], class_names=names,
                           splits=splits)


def load_sample(root, sample_id, manifest: DatasetManifest) -> SegSample:
    img_path = os.path.join(root, "images", f"{sample_id}.png")
    lab_path = os.path.join(root, "labels", f"{sample_id}.png")
    for p in ((img_path, lab_path) if manifest.layout == "rgbt"
              else (img_path, os.path.join(root, "images",
                                           f"{sample_id}_th.png"), lab_path)):
        if not os.path.exists(p):
            raise MissingFileError(f"missing file {p}")
    if manifest.layout == "rgbt":
        rgba = np.asarray(Image.open(img_path).convert("RGBA"))
        rgb8 = rgba[:, :, :3]
        th8 = rgba[:, :, 3]
    else:
        rgb8 = np.asarray(Image.open(img_path).convert("RGB"))
        th8 = np.asarray(Image.open(
            os.path.join(root, "images", f"{sample_id}_th.png")).convert("L"))
    labels = np.asarray(Image.open(lab_path).convert("L")).astype(np.int32)
    if rgb8.shape[:2] != labels.shape or th8.shape != labels.shape:
        raise SizeMismatchError(
            f"sample {sample_id!r}: rgb {rgb8.shape[:2]}, thermal "
            f"{th8.shape}, labels {labels.shape} must share extents")
    if labels.max(initial=0) >= manifest.num_classes:
        bad = np.argwhere(labels >= manifest.num_classes)[0]
        raise LabelRangeError(
            f"label {int(labels[tuple(bad)])} at pixel {tuple(int(v) for v in bad)} "
            f"out of range [0, {manifest.num_classes - 1}]")
    scale = np.float32(255.0)
    return SegSample(
        id=sample_id,
        rgb=(rgb8.astype(np.float32) / scale).transpose(2, 0, 1).copy(),
        thermal=(th8.astype(np.float32) / scale)[None].copy(),
        labels=labels)


def load_corpus(root) -> Corpus:
    manifest = load_manifest(root)
    samples = {split: [load_sample(root, sid, manifest) for sid in ids]
               for split, ids in manifest.splits.items()}
    return Corpus(manifest=manifest, samples=samples)
