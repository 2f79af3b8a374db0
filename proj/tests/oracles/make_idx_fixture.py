#!/usr/bin/env python3
"""Writes the hand-built IDX fixtures under tests/data/.

mnist4: four 28x28 images, pixel (i, p) = (7*i + 3*p) % 256, labels 2 0 3 1.
Also a truncated pixel file, a labels file with the image magic, and a labels
file with a mismatched count.
"""
import os
import struct
import sys

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")
os.makedirs(out, exist_ok=True)

N, R, C = 4, 28, 28
pixels = bytes((7 * i + 3 * p) % 256 for i in range(N) for p in range(R * C))
labels = bytes([2, 0, 3, 1])

images = struct.pack(">IIII", 0x00000803, N, R, C) + pixels
label_file = struct.pack(">II", 0x00000801, N) + labels


def write(name, data):
    with open(os.path.join(out, name), "wb") as f:
        f.write(data)


write("mnist4-images.idx3-ubyte", images)
write("mnist4-labels.idx1-ubyte", label_file)
write("mnist4-images-truncated.idx3-ubyte", images[:-100])
write("mnist4-labels-badmagic.idx1-ubyte", struct.pack(">II", 0x00000803, N) + labels)
write("mnist3-labels.idx1-ubyte", struct.pack(">II", 0x00000801, 3) + labels[:3])
print("wrote fixtures to", out)
