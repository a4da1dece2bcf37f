import numpy as np
from PIL import Image


def read_png(path):
    """8-bit RGB PNG -> float64 HxWx3 array in [0, 1]."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as e:
        raise ValueError(f"cannot decode image {path}: {e}") from None
    return arr.astype(np.float64) / 255.0


def to_uint8(img):
    return np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)


def write_png(path, img):
    Image.fromarray(to_uint8(img), mode="RGB").save(path, format="PNG")
