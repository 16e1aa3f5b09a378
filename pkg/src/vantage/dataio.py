"""CSV schemas for features, labels, and scores.

Feature files carry one row per photo: id column followed by the 91 image
columns and the 24 geometry columns, with a stable header. Label files
are ``id,label`` with labels +-1. Score files are written by the scoring
pipeline as ``id,f,score,label``.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ParseError
from .features2d import FEATURE2D_COLUMNS
from .features3d import FEATURE3D_COLUMNS
from .learning import Dataset

FEATURE_HEADER = ["id"] + FEATURE2D_COLUMNS + FEATURE3D_COLUMNS


def save_features_csv(path, ids, X_image, X_geometry):
    X_image = np.asarray(X_image, dtype=float)
    X_geometry = np.asarray(X_geometry, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_HEADER)
        for i, pid in enumerate(ids):
            row = [pid] + [f"{v:.17g}" for v in X_image[i]] + [
                f"{v:.17g}" for v in X_geometry[i]
            ]
            writer.writerow(row)


def load_features_csv(path):
    """Returns (ids, X_image, X_geometry); validates the header."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FEATURE_HEADER:
            got = header[:4] if header else header
            raise ParseError(
                f"feature CSV header mismatch (expected {len(FEATURE_HEADER)} "
                f"columns starting {FEATURE_HEADER[:4]}, got {got})"
            )
        ids, img, geo = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FEATURE_HEADER):
                raise ParseError(
                    f"expected {len(FEATURE_HEADER)} columns, got {len(row)}",
                    line=lineno,
                )
            ids.append(row[0])
            try:
                vals = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno)
            img.append(vals[: len(FEATURE2D_COLUMNS)])
            geo.append(vals[len(FEATURE2D_COLUMNS) :])
    return ids, np.array(img), np.array(geo)


def save_labels_csv(path, ids, labels):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for pid, lab in zip(ids, labels):
            writer.writerow([pid, int(lab)])


def load_labels_csv(path):
    labels = {}
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "label"]:
            raise ParseError(f"label CSV header mismatch: {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                lab = int(row[1])
            except (IndexError, ValueError) as exc:
                raise ParseError(str(exc), line=lineno)
            if lab not in (-1, 1):
                raise ParseError(f"label must be +-1, got {lab}", line=lineno)
            labels[row[0]] = lab
    return labels


def dataset_from_files(features_path, labels_path) -> Dataset:
    """Join a feature CSV with a label CSV on id."""
    ids, X_img, X_geo = load_features_csv(features_path)
    labels = load_labels_csv(labels_path)
    missing = [i for i in ids if i not in labels]
    if missing:
        raise ParseError(
            f"{len(missing)} feature row(s) without labels, e.g. {missing[:3]}"
        )
    y = np.array([labels[i] for i in ids], dtype=float)
    return Dataset(ids, X_img, X_geo, y)


def save_scores_csv(path, ids, f_values, scores, labels):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "f", "score", "label"])
        for pid, f, s, lab in zip(ids, f_values, scores, labels):
            writer.writerow([pid, f"{f:.17g}", f"{s:.17g}", int(lab)])
