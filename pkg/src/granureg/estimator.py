"""Scikit-learn compatible front end for the granule stream regressor.

The estimator treats every partial_fit call as one stream batch: rows are
merged with the data retained from earlier batches, re-granulated, and
filtered down to the recent granules. fit resets the model and trains on a
single batch. One feature column (temporal_dim) must carry the stream's
temporal coordinate.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import Instance
from .evaluation import estimate_model_size
from .forgetting import RegressorState, observe_batch, predict_current
from .granulation import GranulationParams

__all__ = ["GranuleStreamRegressor"]


class GranuleStreamRegressor(BaseEstimator, RegressorMixin):
    """Granule-based regression over batched streams with iterative forgetting.

    Parameters
    ----------
    temporal_dim : index of the feature column holding the temporal coordinate.
    leaf_capacity : max instances per index leaf.
    max_fanout : max children per internal index node.
    avar_ratio_threshold : aggregation aggressiveness; see GranulationParams.
    min_granule_size : nodes below this size are never split further.
    forgetting : when False nothing is ever discarded (ablation mode).
    """

    def __init__(
        self,
        temporal_dim: int = 0,
        leaf_capacity: int = 16,
        max_fanout: int = 8,
        avar_ratio_threshold: float = 1.0,
        min_granule_size: int = 2,
        forgetting: bool = True,
    ):
        self.temporal_dim = temporal_dim
        self.leaf_capacity = leaf_capacity
        self.max_fanout = max_fanout
        self.avar_ratio_threshold = avar_ratio_threshold
        self.min_granule_size = min_granule_size
        self.forgetting = forgetting

    def _init_state(self) -> RegressorState:
        return RegressorState(
            granulation=GranulationParams(
                avar_ratio_threshold=self.avar_ratio_threshold,
                min_granule_size=self.min_granule_size,
            ),
            leaf_capacity=self.leaf_capacity,
            max_fanout=self.max_fanout,
            temporal_dim=self.temporal_dim,
            forget=self.forgetting,
        )

    def _check_batch(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True, dtype=np.float64)
        if not 0 <= self.temporal_dim < X.shape[1]:
            raise ValueError(
                f"temporal_dim {self.temporal_dim} out of range for "
                f"{X.shape[1]} feature columns"
            )
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        return X, np.asarray(y, dtype=np.float64)

    def fit(self, X, y):
        """Reset the model and train on X, y as the first batch."""
        X, y = self._check_batch(X, y)
        self.state_ = self._init_state()
        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = y.shape[1]
        self._next_sequence_id = 0
        return self._observe(X, y)

    def partial_fit(self, X, y):
        """Feed one more batch; rows continue the stream's arrival order."""
        if not hasattr(self, "state_"):
            return self.fit(X, y)
        X, y = self._check_batch(X, y)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        if y.shape[1] != self.n_outputs_:
            raise ValueError(f"expected {self.n_outputs_} outputs, got {y.shape[1]}")
        return self._observe(X, y)

    def _observe(self, X: np.ndarray, y: np.ndarray):
        start = self._next_sequence_id
        batch = [
            Instance(features=X[i], target=y[i], sequence_id=start + i)
            for i in range(X.shape[0])
        ]
        self._next_sequence_id = start + X.shape[0]
        self.state_ = observe_batch(self.state_, batch)
        return self

    def predict(self, X):
        """Point predictions; shape (n,) for one output, else (n, n_outputs)."""
        check_is_fitted(self, "state_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        out = np.empty((X.shape[0], self.n_outputs_))
        for i in range(X.shape[0]):
            out[i] = predict_current(self.state_, X[i])
        return out[:, 0] if self.n_outputs_ == 1 else out

    @property
    def granule_count_(self) -> int:
        check_is_fitted(self, "state_")
        return len(self.state_.model.recent_granules)

    @property
    def retained_instances_(self) -> int:
        check_is_fitted(self, "state_")
        return len(self.state_.model.recent_data)

    @property
    def model_size_bytes_(self) -> int:
        check_is_fitted(self, "state_")
        return estimate_model_size(self.state_)
