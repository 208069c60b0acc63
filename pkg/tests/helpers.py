import numpy as np

from feedback_kmeans import Dataset


def make_dataset(points, feature_names=None, **kwargs) -> Dataset:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(points.shape[1]))
    return Dataset(points=points, feature_names=feature_names, **kwargs)
