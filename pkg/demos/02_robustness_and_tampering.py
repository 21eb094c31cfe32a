# coding: utf-8

# # What survives, and what gets flagged
#
# Benign edits should keep the id readable. Content edits should keep the
# id readable too, but lower the PSNR between stored and fresh signatures.
# This walks the corpus and prints both.

# %%

import io
import math
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from contentverify.imaging import adjust_brightness, load_image, resize_bilinear
from contentverify.pipeline import read_content_id, register_content, verify_content
from contentverify.registry import open_store
from contentverify.stego import MasterKey

CORPUS = sorted(p for p in (Path(__file__).resolve().parents[1] / "corpus").iterdir() if p.suffix in (".jpg", ".png"))
key = MasterKey(bytes(range(32)))
store = open_store(tempfile.mkdtemp(prefix="cvs-demo-"))


def jpeg(img, quality):
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="JPEG", quality=quality)
    buf.seek(0)
    return np.asarray(Image.open(buf).convert("RGB"))


def reads(img, cid):
    try:
        return read_content_id(img, key) == cid
    except Exception:
        return False


def patch(img, donor, fraction):
    h, w = img.shape[:2]
    ph, pw = int(round(h * math.sqrt(fraction))), int(round(w * math.sqrt(fraction)))
    top, left = (h - ph) // 2, (w - pw) // 2
    out = img.copy()
    out[top : top + ph, left : left + pw] = donor[top : top + ph, left : left + pw]
    return out


# %%

marked = [register_content(load_image(p), "", p.name, store, key) for p in CORPUS]

# %% [markdown]
# Brightening by 15% and JPEG at several qualities. The mark is added to
# low-magnitude spectrum positions, so brightness (a near-uniform gain) is
# harmless while JPEG quantization erases it quickly below quality 95.

# %%

print("brightness x1.15:", sum(reads(adjust_brightness(m, 1.15), c) for m, c in marked), "/", len(marked))
for q in (100, 95, 90, 85, 75):
    print(f"jpeg q{q}:", sum(reads(jpeg(m, q), c) for m, c in marked), "/", len(marked))

# %% [markdown]
# Centred patches from the next corpus photo, at 5%, 10% and 25% of the area.

# %%

print(f"{'image':24s} {'5%':>8s} {'10%':>8s} {'25%':>8s}")
for i, (m, cid) in enumerate(marked):
    donor = resize_bilinear(marked[(i + 1) % len(marked)][0], m.shape[1], m.shape[0])
    cells = []
    for frac in (0.05, 0.10, 0.25):
        r = verify_content(patch(m, donor, frac), store, key)
        cells.append(f"{r.psnr_db:6.2f}{r.verdict[0]}" if r.psnr_db is not None else f"{r.verdict[:6]:>8s}")
    print(f"{CORPUS[i].name:24s} " + " ".join(f"{c:>8s}" for c in cells))
print("(s = suspected, t = tampered)")
