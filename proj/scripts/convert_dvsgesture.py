"""Convert DVS128 Gesture samples stored as NumPy arrays to EVS1 plus a manifest.

Expected input: <src>/<split>/<class index>/*.npy, each an N x 4 array of
events. Column order and time unit vary between exports, so both are
options (default columns t,x,y,p with times in microseconds).
"""

import argparse
import pathlib

import numpy as np

from evs1 import ManifestWriter

SCALE = {"us": 1.0, "ms": 1e3, "s": 1e6}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("src", help="directory holding train/ and test/")
    ap.add_argument("out", help="output dataset directory (e.g. $LSM_DATA_ROOT/dvsgesture)")
    ap.add_argument("--columns", default="t,x,y,p", help="column order of the arrays")
    ap.add_argument("--time-unit", choices=sorted(SCALE), default="us")
    ap.add_argument("--limit", type=int, default=0, help="max samples per split (0 = all)")
    args = ap.parse_args()

    cols = {name: i for i, name in enumerate(args.columns.split(","))}
    if sorted(cols) != ["p", "t", "x", "y"]:
        ap.error("--columns must name t, x, y and p once each")

    writer = ManifestWriter(args.out)
    for split in ("train", "test"):
        files = sorted(pathlib.Path(args.src, split).glob("*/*.npy"))
        if args.limit:
            files = files[: args.limit]
        for f in files:
            ev = np.load(f)
            t = ev[:, cols["t"]].astype(np.float64) * SCALE[args.time_unit]
            t = np.rint(t - t.min()).astype(np.uint64) if len(t) else t.astype(np.uint64)
            p = (ev[:, cols["p"]] > 0).astype(np.uint8)
            writer.add(split, 128, 128, int(f.parent.name), t, ev[:, cols["x"]], ev[:, cols["y"]], p)
    print(writer.close("DVSGesture converted from " + str(args.src)))


if __name__ == "__main__":
    main()
