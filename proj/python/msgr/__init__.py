"""Multiscale coarse spaces on weighted graphs.

The compiled core lives in ``msgr._core``; this module adds keyword-style
helpers on top of it.
"""

from ._core import (
    ClusterSet,
    Error,
    Partition,
    Problem,
    __version__,
    cluster,
    config_reference,
    constraints,
    galerkin_residual,
    partition,
    prolongation,
    relative_errors,
    solve_coarse,
    solve_fine,
    solve_transient,
)
from . import _core


def _text(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(_text(v) for v in value)
    return str(value)


def _overrides(section, params):
    return [f"{section}.{key}={_text(value)}" for key, value in params.items()]


def build_problem(family="fem", seed=0, **params):
    """Builds a problem; keyword arguments are keys of the [problem] section."""
    return _core.build_problem(_overrides("problem", {"family": family, **params}), seed)


def run_experiment(config="", **sections):
    """Runs a sweep and returns one dict per row.

    ``config`` is INI text; each keyword names a section and maps to a dict of
    overrides, e.g. ``sweep={"m": [1, 2, 4]}``.
    """
    overrides = []
    for section, params in sections.items():
        overrides += _overrides(section, params)
    return _core.run_experiment(config, overrides)


__all__ = [
    "ClusterSet",
    "Error",
    "Partition",
    "Problem",
    "__version__",
    "build_problem",
    "cluster",
    "config_reference",
    "constraints",
    "galerkin_residual",
    "partition",
    "prolongation",
    "relative_errors",
    "run_experiment",
    "solve_coarse",
    "solve_fine",
    "solve_transient",
]
