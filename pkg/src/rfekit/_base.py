"""Minimal estimator plumbing shared by the fit/transform/predict classes.

Follows the scikit-learn conventions (``get_params``/``set_params`` backed by
the ``__init__`` signature, trailing-underscore fitted attributes) without
depending on scikit-learn, so the estimators still compose with pipelines and
``clone()`` that only rely on the protocol.
"""

from __future__ import annotations

import inspect


class NotFittedError(RuntimeError):
    """Estimator used before ``fit``."""


class ParamsMixin:
    """sklearn-style parameter introspection for plain keyword-arg estimators."""

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(
                    f"invalid parameter {name!r} for {type(self).__name__}; "
                    f"valid parameters are {sorted(valid)}"
                )
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_is_fitted(estimator, attribute: str) -> None:
    """Raise :class:`NotFittedError` unless ``estimator`` carries ``attribute``."""
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} instance is not fitted yet; call fit() first"
        )
