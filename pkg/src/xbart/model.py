"""Fitting entry point, posterior prediction, and model persistence.

A fitted model is the centering constant plus the retained sweep snapshots;
prediction averages the forest evaluations of those snapshots and adds the
constant back.  Models round-trip through a versioned JSON container whose
floats are written with full ``repr`` precision, so loaded models predict
bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .data import PredictorMatrix
from .errors import DataError, ModelFormatError
from .forest import ForestSampler, Hyperparams, SweepDraw
from .tree import Tree

_FORMAT = "xbart-model"
_VERSION = 1


@dataclass
class FittedModel:
    """Everything needed to predict: retained draws plus the data schema.

    ``draws`` holds only post-burn-in snapshots.  ``history`` carries the
    full sweep record for in-memory fits (variance traces, diagnostics) and
    is ``None`` for models loaded from disk.
    """

    params: Hyperparams
    y_offset: float
    n_features: int
    categorical: np.ndarray
    feature_names: list[str] | None
    draws: list[SweepDraw]
    history: list[SweepDraw] | None = None

    def _check_features(self, X) -> PredictorMatrix:
        if not isinstance(X, PredictorMatrix):
            X = PredictorMatrix.from_rows(X, categorical=self.categorical)
        if X.p != self.n_features:
            raise DataError(
                f"model was fitted on {self.n_features} columns, got {X.p}"
            )
        return X

    def predict_draws(self, X) -> np.ndarray:
        """Per-draw predictions, shape ``(n_rows, n_retained_draws)``.

        Column ``k`` is the centering constant plus the sum of tree
        evaluations of retained snapshot ``k``.
        """
        X = self._check_features(X)
        if not self.draws:
            raise ModelFormatError("model holds no retained draws")
        out = np.empty((X.n, len(self.draws)))
        for k, draw in enumerate(self.draws):
            acc = np.full(X.n, self.y_offset)
            for tree in draw.trees:
                acc += tree.predict(X)
            out[:, k] = acc
        return out

    def predict(self, X) -> np.ndarray:
        """Posterior-mean prediction: the average over retained draws."""
        return self.predict_draws(X).mean(axis=1)

    def sigma2_draws(self) -> np.ndarray:
        """Retained noise-variance draws, in sweep order."""
        return np.array([d.sigma2 for d in self.draws])

    def save(self, path) -> None:
        """Write the versioned JSON container."""
        if not self.draws:
            raise ModelFormatError("refusing to save a model with no retained draws")
        payload = {
            "format": _FORMAT,
            "version": _VERSION,
            "params": asdict(self.params),
            "y_offset": self.y_offset,
            "n_features": self.n_features,
            "categorical": [int(c) for c in self.categorical],
            "feature_names": self.feature_names,
            "draws": [
                {
                    "sweep": d.sweep,
                    "sigma2": d.sigma2,
                    "tau": d.tau,
                    "trees": [t.to_records() for t in d.trees],
                }
                for d in self.draws
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")


def fit(X, y, params: Hyperparams | None = None, seed=0) -> FittedModel:
    """Fit the sampler to ``(X, y)`` and keep the post-burn-in draws.

    ``X`` may be a ``PredictorMatrix`` or a plain ``(n, p)`` array (all
    columns continuous).  ``seed`` feeds ``numpy.random.default_rng``.
    """
    sampler = ForestSampler(X, y, params=params, seed=seed)
    draws = sampler.run()
    return FittedModel(
        params=sampler.params,
        y_offset=sampler.y_offset,
        n_features=sampler.X.p,
        categorical=sampler.X.categorical.copy(),
        feature_names=list(sampler.X.names) if sampler.X.names else None,
        draws=draws[sampler.params.burnin :],
        history=draws,
    )


def load_model(path) -> FittedModel:
    """Read a model container written by ``FittedModel.save``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict) or payload.get("format") != _FORMAT:
        raise ModelFormatError(f"{path}: missing {_FORMAT!r} header")
    if payload.get("version") != _VERSION:
        raise ModelFormatError(
            f"{path}: unsupported version {payload.get('version')!r}, "
            f"this build reads version {_VERSION}"
        )
    try:
        params = Hyperparams(**payload["params"])
        n_features = int(payload["n_features"])
        draws = [
            SweepDraw(
                sweep=int(d["sweep"]),
                trees=[Tree.from_records(t, n_features) for t in d["trees"]],
                sigma2=float(d["sigma2"]),
                tau=float(d["tau"]),
            )
            for d in payload["draws"]
        ]
        model = FittedModel(
            params=params,
            y_offset=float(payload["y_offset"]),
            n_features=n_features,
            categorical=np.asarray(payload["categorical"], dtype=bool),
            feature_names=payload.get("feature_names"),
            draws=draws,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model payload ({exc})") from None
    if not model.draws:
        raise ModelFormatError(f"{path}: model holds no retained draws")
    return model
