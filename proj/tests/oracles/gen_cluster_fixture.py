"""Generates tests/data/cluster_oracle.json with scikit-learn as the reference.

OPTICS labels (xi extraction) and DBSCAN noise sets for 50 random 2-D
instances, plus the two-clump instance. A callable euclidean metric keeps the
distance arithmetic identical to the C++ side.
"""
import json
import pathlib

import numpy as np
from sklearn.cluster import DBSCAN, OPTICS


def euclid(a, b):
    return np.sqrt(((a - b) ** 2).sum())


def make_instance(rng):
    n_blobs = int(rng.integers(1, 5))
    n = int(rng.integers(20, 201))
    centers = rng.uniform(-10, 10, size=(n_blobs, 2))
    spreads = rng.uniform(0.3, 2.0, size=n_blobs)
    owner = rng.integers(0, n_blobs, size=n)
    pts = centers[owner] + rng.normal(size=(n, 2)) * spreads[owner, None]
    n_noise = int(rng.integers(0, max(1, n // 10)))
    pts[:n_noise] = rng.uniform(-14, 14, size=(n_noise, 2))
    pts = np.round(pts, 6)
    min_samples = int(rng.integers(3, 11))
    min_cluster_size = int(rng.integers(min_samples, 2 * min_samples + 1))
    eps = float(np.round(rng.uniform(0.4, 1.5), 3))
    return pts, min_samples, min_cluster_size, eps


def two_clumps():
    pts = []
    for cx in (0.0, 100.0):
        for i in range(50):
            pts.append([cx + (i % 10) * 0.5, (i // 10) * 0.5])
    return np.array(pts)


def solve(pts, min_samples, min_cluster_size, eps):
    opt = OPTICS(min_samples=min_samples, min_cluster_size=min_cluster_size, xi=0.05,
                 metric=euclid, algorithm="brute").fit(pts)
    db = DBSCAN(eps=eps, min_samples=min_samples, metric=euclid, algorithm="brute").fit(pts)
    return {
        "points": pts.tolist(),
        "min_samples": min_samples,
        "min_cluster_size": min_cluster_size,
        "eps": eps,
        "optics_labels": opt.labels_.tolist(),
        "optics_ordering": opt.ordering_.tolist(),
        "dbscan_labels": db.labels_.tolist(),
    }


def main():
    rng = np.random.default_rng(20240611)
    cases = [solve(*make_instance(rng)) for _ in range(50)]
    fixture = {"random": cases, "two_clumps": solve(two_clumps(), 5, 5, 1.0)}
    out = pathlib.Path(__file__).resolve().parents[1] / "data" / "cluster_oracle.json"
    out.write_text(json.dumps(fixture))


if __name__ == "__main__":
    main()
