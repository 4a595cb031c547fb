#!/usr/bin/env python3
# Copyright 2026 The QuadMech Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Convert a CSV MNIST subset (784 pixel columns, then the label) to IDX files.

Accepts a .csv, a .csv.gz, or an mlxtend wheel containing
mlxtend/data/data/mnist_5k.csv.gz.
"""
import argparse
import gzip
import io
import pathlib
import struct
import zipfile

WHEEL_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(src: pathlib.Path):
    if src.suffix == ".whl":
        with zipfile.ZipFile(src) as z:
            text = gzip.decompress(z.read(WHEEL_MEMBER)).decode()
    elif src.suffix == ".gz":
        text = gzip.decompress(src.read_bytes()).decode()
    else:
        text = src.read_text()
    for line in io.StringIO(text):
        line = line.strip()
        if line:
            yield [int(float(v)) for v in line.split(",")]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("source", type=pathlib.Path)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/mnist-subset"))
    args = ap.parse_args()

    rows = list(read_rows(args.source))
    assert all(len(r) == 785 for r in rows), "expected 784 pixels + label per row"
    args.out.mkdir(parents=True, exist_ok=True)
    n = len(rows)
    with open(args.out / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        for r in rows:
            f.write(bytes(r[:784]))
    with open(args.out / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(bytes(r[784] for r in rows))
    print(f"wrote {n} examples to {args.out}")


if __name__ == "__main__":
    main()
