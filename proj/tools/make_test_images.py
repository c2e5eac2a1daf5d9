"""Regenerate tests/data/natural from the sample images bundled with
scikit-image and scikit-learn.

Each image is converted to 8-bit luma (BT.601), area-downsampled so the
shorter side is SIZE pixels and center-cropped to SIZE x SIZE.
"""
import os
import sys

import numpy as np
from PIL import Image
import skimage
import sklearn.datasets

SIZE = 192

SKIMAGE = [
    "astronaut.png", "camera.png", "chelsea.png", "coffee.png", "brick.png",
    "grass.png", "gravel.png", "moon.png", "motorcycle_left.png",
    "motorcycle_right.png", "rocket.jpg", "retina.jpg", "hubble_deep_field.jpg",
    "ihc.png", "text.png",
]
SKLEARN = ["china.jpg", "flower.jpg"]


def load(path):
    img = Image.open(path).convert("RGB")
    w, h = img.size
    s = SIZE / min(w, h)
    img = img.resize((max(SIZE, round(w * s)), max(SIZE, round(h * s))), Image.BOX)
    w, h = img.size
    left, top = (w - SIZE) // 2, (h - SIZE) // 2
    return img.crop((left, top, left + SIZE, top + SIZE))


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    sk_dir = os.path.join(os.path.dirname(skimage.__file__), "data")
    sl_dir = os.path.join(os.path.dirname(sklearn.datasets.__file__), "images")
    sources = [os.path.join(sk_dir, n) for n in SKIMAGE]
    sources += [os.path.join(sl_dir, n) for n in SKLEARN]
    for src in sources:
        rgb = np.asarray(load(src), dtype=np.float64)
        y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
        y = np.clip(np.round(y), 0, 255).astype(np.uint8)
        name = os.path.splitext(os.path.basename(src))[0] + ".png"
        Image.fromarray(y, mode="L").save(os.path.join(out_dir, name), optimize=True)
        print(name)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/natural")
