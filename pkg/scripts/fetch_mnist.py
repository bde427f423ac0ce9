"""Download the MNIST IDX files into data/mnist/ as .gz files.

The files are taken from the ``MNIST-dir`` source distribution on PyPI,
which bundles the four original IDX files, and are checked against the
well-known SHA-256 digests of the uncompressed data.

    python scripts/fetch_mnist.py [--dest data/mnist] [--index https://pypi.org/pypi]
"""

import argparse
import gzip
import hashlib
import io
import json
import sys
import tarfile
import urllib.request
from pathlib import Path

SHA256 = {
    "train-images.idx3-ubyte": "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db",
    "train-labels.idx1-ubyte": "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5",
    "t10k-images.idx3-ubyte": "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7",
    "t10k-labels.idx1-ubyte": "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2",
}


def sdist_url(index: str) -> str:
    with urllib.request.urlopen(f"{index.rstrip('/')}/MNIST-dir/json") as resp:
        meta = json.load(resp)
    for f in meta["urls"]:
        if f["packagetype"] == "sdist":
            return f["url"]
    raise SystemExit("no source distribution of MNIST-dir found")


def main(argv=None) -> int:
    root = Path(__file__).resolve().parents[1]
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", default=str(root / "data" / "mnist"))
    parser.add_argument("--index", default="https://pypi.org/pypi")
    args = parser.parse_args(argv)
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)

    url = sdist_url(args.index)
    print(f"downloading {url}")
    with urllib.request.urlopen(url) as resp:
        archive = tarfile.open(fileobj=io.BytesIO(resp.read()), mode="r:gz")
    found = {}
    for member in archive.getmembers():
        name = Path(member.name).name
        if name in SHA256 and member.isfile():
            found[name] = archive.extractfile(member).read()
    missing = set(SHA256) - set(found)
    if missing:
        print(f"archive lacks {sorted(missing)}", file=sys.stderr)
        return 1
    for name, raw in found.items():
        digest = hashlib.sha256(raw).hexdigest()
        if digest != SHA256[name]:
            print(f"{name}: checksum mismatch ({digest})", file=sys.stderr)
            return 1
        (dest / f"{name}.gz").write_bytes(gzip.compress(raw))
        print(f"wrote {dest / (name + '.gz')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
