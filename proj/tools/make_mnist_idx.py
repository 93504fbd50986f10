#!/usr/bin/env python3
"""Build IDX files from the 10,000 MNIST digits bundled in the npm `mnist` package.

The package stores each digit class as a flat JSON array of 28x28 images with
pixel values already divided by 255 (rounded to 3 decimals). This script undoes
the scaling and writes the two standard IDX files:

    <out>/images-idx3-ubyte   magic 0x00000803, dims (count, 28, 28)
    <out>/labels-idx1-ubyte   magic 0x00000801, dims (count,)

Usage:
    tools/make_mnist_idx.py [--package DIR] [--out data/mnist]

Without --package the script runs `npm pack mnist` in a temp directory.
"""

import argparse
import json
import pathlib
import struct
import subprocess
import tarfile
import tempfile

SIDE = 28


def fetch_package(workdir: pathlib.Path) -> pathlib.Path:
    subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=workdir, check=True,
                   stdout=subprocess.DEVNULL)
    tarball = next(workdir.glob("mnist-*.tgz"))
    with tarfile.open(tarball) as tar:
        tar.extractall(workdir)
    return workdir / "package"


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--package", type=pathlib.Path)
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/mnist"))
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        package = args.package or fetch_package(pathlib.Path(tmp))
        images = bytearray()
        labels = bytearray()
        for digit in range(10):
            data = json.loads((package / "src" / "digits" / f"{digit}.json").read_text())["data"]
            assert len(data) % (SIDE * SIDE) == 0
            images.extend(min(255, max(0, round(v * 255))) for v in data)
            labels.extend([digit] * (len(data) // (SIDE * SIDE)))

    count = len(labels)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "images-idx3-ubyte").write_bytes(
        struct.pack(">IIII", 0x803, count, SIDE, SIDE) + bytes(images))
    (args.out / "labels-idx1-ubyte").write_bytes(
        struct.pack(">II", 0x801, count) + bytes(labels))
    print(f"wrote {count} examples to {args.out}")


if __name__ == "__main__":
    main()
