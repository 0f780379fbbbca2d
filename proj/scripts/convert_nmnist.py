"""Convert N-MNIST (Orchard et al. .bin files) to EVS1 plus a manifest.

Expected input: <src>/Train/<digit>/*.bin and <src>/Test/<digit>/*.bin.
Each event is 5 bytes: x, y, then polarity in bit 7 and a 23-bit timestamp
in microseconds across the remaining bits.
"""

import argparse
import pathlib

import numpy as np

from evs1 import ManifestWriter


def read_bin(path):
    raw = np.fromfile(path, dtype=np.uint8)
    raw = raw[: len(raw) // 5 * 5].reshape(-1, 5).astype(np.uint32)
    x = raw[:, 0]
    y = raw[:, 1]
    p = raw[:, 2] >> 7
    t = ((raw[:, 2] & 0x7F) << 16) | (raw[:, 3] << 8) | raw[:, 4]
    return t, x, y, p


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("src", help="directory holding Train/ and Test/")
    ap.add_argument("out", help="output dataset directory (e.g. $LSM_DATA_ROOT/nmnist)")
    ap.add_argument("--limit", type=int, default=0, help="max samples per split (0 = all)")
    args = ap.parse_args()

    writer = ManifestWriter(args.out)
    for split, folder in (("train", "Train"), ("test", "Test")):
        files = sorted(pathlib.Path(args.src, folder).glob("*/*.bin"))
        if args.limit:
            files = files[: args.limit]
        for f in files:
            t, x, y, p = read_bin(f)
            writer.add(split, 34, 34, int(f.parent.name), t, x, y, p)
    print(writer.close("N-MNIST converted from " + str(args.src)))


if __name__ == "__main__":
    main()
