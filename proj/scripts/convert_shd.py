"""Convert the Spiking Heidelberg Digits HDF5 files to EVS1 plus a manifest.

Each sample becomes a 700 x 1 sensor: x = cochlea channel, y = 0,
polarity 0, time in microseconds.
"""

import argparse
import pathlib

import h5py
import numpy as np

from evs1 import ManifestWriter

CHANNELS = 700


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("src", help="directory with shd_train.h5 and shd_test.h5")
    ap.add_argument("out", help="output dataset directory (e.g. $LSM_DATA_ROOT/shd)")
    ap.add_argument("--limit", type=int, default=0, help="max samples per split (0 = all)")
    args = ap.parse_args()

    writer = ManifestWriter(args.out)
    for split in ("train", "test"):
        with h5py.File(pathlib.Path(args.src) / f"shd_{split}.h5", "r") as f:
            times = f["spikes"]["times"]
            units = f["spikes"]["units"]
            labels = f["labels"]
            n = len(labels) if not args.limit else min(args.limit, len(labels))
            for i in range(n):
                t = np.rint(np.asarray(times[i]) * 1e6).astype(np.uint64)
                x = np.asarray(units[i]).astype(np.uint16)
                zeros = np.zeros(len(t), dtype=np.uint16)
                writer.add(split, CHANNELS, 1, int(labels[i]), t, x, zeros, zeros.astype(np.uint8))
    print(writer.close("SHD converted from " + str(args.src)))


if __name__ == "__main__":
    main()
