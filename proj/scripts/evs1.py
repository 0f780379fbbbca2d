"""Writer/reader for the binary event format consumed by the lsm engine.

Layout (little-endian): magic b"EVS1", u32 width, u32 height, u32 label
(0xFFFFFFFF = none), u64 count, then count packed records of
(u64 t_us, u16 x, u16 y, u8 polarity), sorted by time.
"""

import argparse
import pathlib
import struct

import numpy as np

NO_LABEL = 0xFFFFFFFF
RECORD = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "u1")])


def write_evs1(path, width, height, label, t, x, y, p):
    t = np.asarray(t, dtype=np.uint64)
    order = np.argsort(t, kind="stable")
    rec = np.empty(len(t), dtype=RECORD)
    rec["t"] = t[order]
    rec["x"] = np.asarray(x)[order]
    rec["y"] = np.asarray(y)[order]
    rec["p"] = np.asarray(p)[order]
    if len(rec) and (rec["x"].max() >= width or rec["y"].max() >= height or rec["p"].max() > 1):
        raise ValueError(f"{path}: event outside {width}x{height} or polarity > 1")
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(b"EVS1")
        f.write(struct.pack("<IIIQ", width, height, NO_LABEL if label is None else label, len(rec)))
        f.write(rec.tobytes())


def read_evs1(path):
    data = pathlib.Path(path).read_bytes()
    if data[:4] != b"EVS1":
        raise ValueError(f"{path}: bad magic")
    width, height, label, count = struct.unpack_from("<IIIQ", data, 4)
    rec = np.frombuffer(data, dtype=RECORD, count=count, offset=24)
    return width, height, (None if label == NO_LABEL else label), rec


class ManifestWriter:
    """Collects `<split> <relative path>` lines under a dataset root."""

    def __init__(self, root):
        self.root = pathlib.Path(root)
        self.lines = []
        self.counts = {}

    def add(self, split, width, height, label, t, x, y, p):
        index = self.counts.get(split, 0)
        self.counts[split] = index + 1
        rel = pathlib.Path(split) / f"{index:06d}.evs"
        write_evs1(self.root / rel, width, height, label, t, x, y, p)
        self.lines.append(f"{split} {rel.as_posix()}")

    def close(self, comment):
        self.root.mkdir(parents=True, exist_ok=True)
        text = f"# {comment}\n" + "\n".join(self.lines) + "\n"
        (self.root / "manifest.txt").write_text(text)
        return self.root / "manifest.txt"


def main():
    ap = argparse.ArgumentParser(description="Write a small reference event file")
    ap.add_argument("out")
    args = ap.parse_args()
    t = [5, 0x100000001, 7]
    write_evs1(args.out, 34, 34, 7, t, [1, 33, 2], [2, 0, 3], [1, 0, 1])
    w, h, label, rec = read_evs1(args.out)
    assert (w, h, label, len(rec)) == (34, 34, 7, 3)
    assert list(rec["t"]) == sorted(t)


if __name__ == "__main__":
    main()
