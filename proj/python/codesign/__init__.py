"""Catalog-based robot co-design as binary linear programming."""

import json
from os import fspath

from ._core import (
    CapacityError,
    CodesignError,
    DomainError,
    LookupError,
    LoweringError,
    ParseError,
    SchemaError,
    exact_vmax,
    max_team_size,
    speed_kappa,
)
from . import _core

__all__ = [
    "CapacityError", "CodesignError", "DomainError", "LookupError", "LoweringError",
    "ParseError", "SchemaError", "exact_vmax", "max_team_size", "speed_kappa",
    "solve", "validate", "sweep", "export_lp", "solve_lp",
]


def solve(path, params=None, *, deterministic=True, time_limit=None, node_limit=None, oracle=False):
    """Lower and solve a problem file; returns the solution as a dict."""
    text, _ = _core.solve_file(fspath(path), dict(params or {}), deterministic, time_limit,
                               node_limit, oracle)
    return json.loads(text)


def validate(path, params=None, *, lifting_cap=None):
    """Lowering report of a problem file."""
    kw = {} if lifting_cap is None else {"lifting_cap": lifting_cap}
    return json.loads(_core.validate_file(fspath(path), dict(params or {}), **kw))


def sweep(path, params=None, *, sample=None, seed=0, cap=None):
    """Sweep CSV text (header plus one row per design)."""
    return _core.sweep_file(fspath(path), dict(params or {}), sample, seed, cap)


def export_lp(path, params=None):
    return _core.export_lp(fspath(path), dict(params or {}))


def solve_lp(text, *, deterministic=True):
    out, _ = _core.solve_lp_text(text, deterministic)
    return json.loads(out)
