"""Scikit-learn style estimators wrapping the core retrieval algorithms.

These follow the fit/transform/kneighbors conventions (and inherit
get_params/set_params from BaseEstimator) so the pieces compose with
pipelines, grid search, and the rest of the sklearn ecosystem. The
underlying math lives in kernels/retrieval/adapter; these classes only
adapt array-in/array-out surfaces.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .adapter import TrainConfig, apply_adapter_array, fit_adapter
from .errors import ContractViolation
from .kernels import _softmax_rows
from .retrieval import TEMPERATURE_GRID, dual_softmax_calibrate, rank, recall_at_k
from .types import SimilarityMatrix


class CosineRetriever(BaseEstimator):
    """Exact dense cosine retrieval over a fitted gallery.

    fit(X) stores the gallery; kneighbors(Q, k) returns the top-k scores and
    gallery indices per query, ties broken by ascending index.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0.0):
            raise ContractViolation("gallery contains zero-norm rows")
        self.gallery_ = X / norms[:, None]
        self.n_features_in_ = X.shape[1]
        return self

    def similarity(self, Q) -> np.ndarray:
        check_is_fitted(self, "gallery_")
        Q = check_array(Q, dtype=np.float64)
        norms = np.linalg.norm(Q, axis=1)
        if np.any(norms == 0.0):
            raise ContractViolation("queries contain zero-norm rows")
        return (Q / norms[:, None]) @ self.gallery_.T

    def kneighbors(self, Q, n_neighbors: int = 10):
        scores = self.similarity(Q)
        k = min(n_neighbors, scores.shape[1])
        # stable top-k: sort by (-score, index)
        order = np.lexsort((np.arange(scores.shape[1])[None, :].repeat(len(scores), 0),
                            -scores), axis=1)[:, :k]
        picked = np.take_along_axis(scores, order, axis=1)
        return picked, order


class DualSoftmaxCalibrator(BaseEstimator, TransformerMixin):
    """Dual-softmax score calibration with an optionally tuned temperature.

    With temperature="auto", fit(S, y) grid-searches the temperature that
    maximizes R@1 on the given similarity matrix, where y[i] is the positive
    column for row i. transform(S) applies the calibration.
    """

    def __init__(self, temperature="auto"):
        self.temperature = temperature

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.temperature == "auto":
            if y is None:
                raise ContractViolation("temperature='auto' needs positive columns y")
            y = np.asarray(y, dtype=int)
            ids = [str(i) for i in range(X.shape[0])]
            cids = [str(j) for j in range(X.shape[1])]
            m = SimilarityMatrix(X, ids, cids)
            positives = {str(i): {str(y[i])} for i in range(X.shape[0])}
            best_tau, best_r1 = None, -1.0
            for tau in TEMPERATURE_GRID:
                r1 = recall_at_k(rank(dual_softmax_calibrate(m, tau)), positives, 1)
                if r1 > best_r1:
                    best_tau, best_r1 = tau, r1
            self.temperature_ = float(best_tau)
        else:
            if not (self.temperature > 0):
                raise ContractViolation("temperature must be positive")
            self.temperature_ = float(self.temperature)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "temperature_")
        X = check_array(X, dtype=np.float64)
        scaled = X * self.temperature_
        return _softmax_rows(scaled, 1.0) * _softmax_rows(scaled.T, 1.0).T


class EmbeddingAligner(BaseEstimator, TransformerMixin):
    """Low-rank residual adapter trained with the dual-softmax loss.

    fit(X, Y) treats rows of X as detailed-side embeddings and rows of Y as
    their paired summary-side embeddings. transform(E) applies the learned
    residual map; at init the map is the identity.
    """

    def __init__(self, rank=8, alpha=16.0, batch_size=16, epochs=1,
                 learning_rate=0.05, loss_temperature=1.0 / 0.07, seed=0):
        self.rank = rank
        self.alpha = alpha
        self.batch_size = batch_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.loss_temperature = loss_temperature
        self.seed = seed

    def fit(self, X, Y):
        X = check_array(X, dtype=np.float64)
        Y = check_array(Y, dtype=np.float64)
        cfg = TrainConfig(
            batch_size=self.batch_size,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            loss_temperature=self.loss_temperature,
            seed=self.seed,
            rank=self.rank,
            alpha=self.alpha,
        )
        result = fit_adapter(X, Y, cfg)
        self.params_ = result.params
        self.log_ = result.log
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        return apply_adapter_array(self.params_, X)
