#!/usr/bin/env python3
"""Produce the benchmark CSVs and sidecar schemas under data/.

Iris is taken from scikit-learn's bundled copy. Balance Scale is generated
from its defining rule (class = sign comparison of left/right torque).
Heart Disease (processed Cleveland) and Nursery are downloaded from the UCI
archive when the machine has network access; without it they are skipped
and the harness simply reports them as unavailable.
"""
import argparse
import csv
import io
import os
import sys
import urllib.request

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"


def write_schema(path, features, label_name):
    with open(path, "w") as f:
        for name, kind, cats in features:
            if kind == "numeric":
                f.write(f"{name} numeric\n")
            else:
                f.write(f"{name} categorical {' '.join(cats)}\n")
        f.write(f"{label_name} label\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def make_iris(outdir):
    from sklearn.datasets import load_iris
    d = load_iris()
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
    rows = []
    for x, t in zip(d.data, d.target):
        rows.append([f"{v:.1f}" for v in x] + [d.target_names[t]])
    write_csv(os.path.join(outdir, "iris.csv"), names + ["species"], rows)
    write_schema(os.path.join(outdir, "iris.schema"),
                 [(n, "numeric", None) for n in names], "species")
    print("wrote iris.csv (150 rows)")


def make_balance_scale(outdir):
    names = ["left_weight", "left_distance", "right_weight", "right_distance"]
    rows = []
    for lw in range(1, 6):
        for ld in range(1, 6):
            for rw in range(1, 6):
                for rd in range(1, 6):
                    left, right = lw * ld, rw * rd
                    cls = "B" if left == right else ("L" if left > right else "R")
                    rows.append([lw, ld, rw, rd, cls])
    write_csv(os.path.join(outdir, "balance_scale.csv"), names + ["class"], rows)
    write_schema(os.path.join(outdir, "balance_scale.schema"),
                 [(n, "numeric", None) for n in names], "class")
    print("wrote balance_scale.csv (625 rows)")


def fetch(url):
    with urllib.request.urlopen(url, timeout=30) as r:
        return r.read().decode("utf-8", "replace")


def make_heart_disease(outdir):
    text = fetch(f"{UCI}/heart-disease/processed.cleveland.data")
    names = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg",
             "thalach", "exang", "oldpeak", "slope", "ca", "thal"]
    raw = [r for r in csv.reader(io.StringIO(text)) if r]
    # '?' cells replaced by the column median; label binarized (0 vs >0)
    cols = list(zip(*raw))
    med = []
    for c in cols[:-1]:
        vals = sorted(float(v) for v in c if v != "?")
        med.append(vals[len(vals) // 2])
    rows = []
    for r in raw:
        feats = [r[i] if r[i] != "?" else str(med[i]) for i in range(13)]
        rows.append(feats + ["present" if float(r[13]) > 0 else "absent"])
    write_csv(os.path.join(outdir, "heart_disease.csv"), names + ["diagnosis"], rows)
    write_schema(os.path.join(outdir, "heart_disease.schema"),
                 [(n, "numeric", None) for n in names], "diagnosis")
    print(f"wrote heart_disease.csv ({len(rows)} rows)")


NURSERY_DOMAINS = [
    ("parents", ["usual", "pretentious", "great_pret"]),
    ("has_nurs", ["proper", "less_proper", "improper", "critical", "very_crit"]),
    ("form", ["complete", "completed", "incomplete", "foster"]),
    ("children", ["1", "2", "3", "more"]),
    ("housing", ["convenient", "less_conv", "critical"]),
    ("finance", ["convenient", "inconv"]),
    ("social", ["nonprob", "slightly_prob", "problematic"]),
    ("health", ["recommended", "priority", "not_recom"]),
]


def make_nursery(outdir):
    text = fetch(f"{UCI}/nursery/nursery.data")
    rows = [r for r in csv.reader(io.StringIO(text)) if len(r) == 9]
    names = [n for n, _ in NURSERY_DOMAINS]
    write_csv(os.path.join(outdir, "nursery.csv"), names + ["class"], rows)
    write_schema(os.path.join(outdir, "nursery.schema"),
                 [(n, "categorical", d) for n, d in NURSERY_DOMAINS], "class")
    print(f"wrote nursery.csv ({len(rows)} rows)")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    make_iris(args.out)
    make_balance_scale(args.out)
    failures = []
    for fn in (make_heart_disease, make_nursery):
        try:
            fn(args.out)
        except Exception as e:  # no network: skip, the harness copes
            failures.append(f"{fn.__name__}: {e}")
    for f in failures:
        print(f"skipped ({f})", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
