"""Write the classic iris measurements to ``iris.csv`` for the CLI demo.

Requires scikit-learn (only for the bundled dataset). The output file has a
header row, four numeric feature columns, and a species label column, matching
the schema expected by ``configs/iris.json``.

Run with ``python demos/make_iris_csv.py [output-path]``.
"""

import sys

from sklearn.datasets import load_iris


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "iris.csv"
    raw = load_iris()
    names = [n.replace(" (cm)", "").replace(" ", "_") for n in raw.feature_names]
    with open(out, "w") as fh:
        fh.write(",".join(names) + ",species\n")
        for row, label in zip(raw.data, raw.target):
            vals = ",".join(f"{v:.1f}" for v in row)
            fh.write(f"{vals},{raw.target_names[label]}\n")
    print(f"wrote {len(raw.data)} rows to {out}")


if __name__ == "__main__":
    main()
