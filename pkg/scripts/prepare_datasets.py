"""Regenerate data/glass.txt and data/pendigits.txt in the sparse labeled format.

Sources are data files bundled in two PyPI wheels, so no network access to
the original repositories is needed:

* Glass: MASS ``fgl`` from ``rdatasets`` (214 x 9, 6 glass types). ``fgl``
  stores the refractive index shifted and rescaled; min-max scaling removes
  that affine difference. Types are written with their UCI numeric codes.
* Pendigits: KEEL ``penbased`` from ``keel-ds`` (10992 x 16, digits 0-9),
  the union of the UCI train and test files.

    pip install --no-deps keel-ds rdatasets
    python scripts/prepare_datasets.py --out data
"""

import argparse
from importlib.resources import files
from pathlib import Path

import numpy as np

from biglearn_gmm.data import Dataset, load_sparse_labeled, write_sparse_labeled

GLASS_CODES = {"WinF": 1, "WinNF": 2, "Veh": 3, "Con": 5, "Tabl": 6, "Head": 7}
GLASS_FEATURES = ["RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe"]


def glass():
    import rdatasets

    df = rdatasets.data("MASS", "fgl")
    X = df[GLASS_FEATURES].to_numpy(dtype=float)
    codes = np.array([GLASS_CODES[t] for t in df["type"]])
    classes = tuple(str(c) for c in sorted(GLASS_CODES.values()))
    labels = np.searchsorted(sorted(GLASS_CODES.values()), codes)
    return Dataset(X, labels, feature_names=tuple(GLASS_FEATURES), name="glass", classes=classes)


def pendigits():
    text = (files("keel_ds") / "data/balanced/raw/penbased.dat").read_text()
    rows = [line.split(",") for line in text.splitlines() if line.strip() and not line.startswith("@")]
    table = np.array([[float(v) for v in row] for row in rows])
    labels = table[:, -1].astype(int)
    return Dataset(table[:, :-1], labels, name="pendigits",
                   classes=tuple(str(c) for c in range(labels.max() + 1)))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for make in (glass, pendigits):
        data = make()
        path = out / f"{data.name}.txt"
        write_sparse_labeled(data, path)
        check = load_sparse_labeled(path, dim=data.dim)
        assert check.n == data.n and np.array_equal(check.labels, data.labels)
        print(f"{path}: n={check.n} d={check.dim} classes={len(check.classes)}")


if __name__ == "__main__":
    main()
