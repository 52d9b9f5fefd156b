import numpy as np
import pytest

from granureg import Granule, Instance


def make_granule(gid, lows, highs, mean, rng=None, n_members=2, temporal_dim=None):
    """A granule with synthetic members spread inside the box averaging to `mean`.

    Members are placed at box corners plus random interior points so the box
    really is the member MBR; targets are chosen to average exactly to mean.
    """
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    rng = rng or np.random.default_rng(0)
    pts = [lows, highs]
    for _ in range(max(0, n_members - 2)):
        pts.append(rng.uniform(lows, highs))
    pts = pts[:max(2, n_members)]
    m = len(pts)
    targets = [mean.copy() for _ in range(m)]
    if m >= 2:
        wiggle = rng.uniform(0.1, 1.0, mean.shape)
        targets[0] = mean + wiggle
        targets[1] = mean - wiggle
    members = tuple(
        Instance(features=p, target=t, sequence_id=i) for i, (p, t) in enumerate(zip(pts, targets))
    )
    true_mean = np.stack([t for t in targets]).mean(axis=0)
    return Granule(box=_box(lows, highs), members=members, mean_target=true_mean, granule_id=gid)


def _box(lows, highs):
    from granureg import BoundingBox

    return BoundingBox(lows, highs)


def random_partition_granules(rng, n_instances, n_granules, d_x):
    """Instances randomly grouped into granules, as the pipeline would produce."""
    feats = rng.uniform(0.0, 10.0, (n_instances, d_x))
    targets = rng.normal(0.0, 1.0, (n_instances, 1))
    instances = [
        Instance(features=feats[i], target=targets[i], sequence_id=i)
        for i in range(n_instances)
    ]
    assignment = rng.integers(0, n_granules, n_instances)
    granules = []
    gid = 0
    for g in range(n_granules):
        idx = np.nonzero(assignment == g)[0]
        if idx.size == 0:
            continue
        granules.append(Granule.from_members([instances[i] for i in idx], gid))
        gid += 1
    return granules


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
