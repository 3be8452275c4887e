#!/usr/bin/env python3
# Copyright 2026 The MST Authors.
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
"""Converts the digit JSON files shipped with the npm `mnist` package into
gzipped IDX files (the format of the official MNIST distribution).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_idx.py package/src/digits data/mnist
"""
import argparse
import gzip
import json
import pathlib
import random
import struct


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir", type=pathlib.Path)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--seed", type=int, default=2018)
    args = ap.parse_args()

    samples = []
    for d in range(10):
        data = json.loads((args.digits_dir / f"{d}.json").read_text())["data"]
        for j in range(len(data) // 784):
            samples.append((d, data[j * 784:(j + 1) * 784]))
    random.Random(args.seed).shuffle(samples)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    n = len(samples)
    with gzip.GzipFile(args.out_dir / "digits-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(bytes(min(255, max(0, int(round(v * 255))))
                      for _, px in samples for v in px))
    with gzip.GzipFile(args.out_dir / "digits-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(bytes(d for d, _ in samples))
    print(f"wrote {n} digits to {args.out_dir}")


if __name__ == "__main__":
    main()
