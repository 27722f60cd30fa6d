"""Fixed-effects dynamic logit: conditional likelihood estimation, average
marginal effects, random-effects comparisons and Monte Carlo tools.

Histories are lists of integer choices, one list per individual.
"""

import json as _json

from . import _core
from ._core import (  # noqa: F401
    ConvergenceError,
    IdentificationError,
    SchemaError,
    ame1,
    ame1_from_weights,
    ame_duration,
    ame_n,
    avg_transition,
    num_threads,
    set_threads,
    simulate,
)

__all__ = [
    "ConvergenceError",
    "IdentificationError",
    "SchemaError",
    "ame1",
    "ame1_from_weights",
    "ame_duration",
    "ame_n",
    "avg_transition",
    "estimate",
    "hausman",
    "named_dgp",
    "num_threads",
    "re_mle",
    "run_experiment",
    "set_threads",
    "simulate",
    "true_ame",
    "weights",
]


def estimate(histories, model="bc-ar1", T=None, num_alternatives=0, d_max=2):
    """Conditional ML estimate; returns the estimate document as a dict."""
    return _json.loads(_core.estimate_json(histories, model, T, num_alternatives, d_max))


def weights(T, beta, closed_form=False):
    return _json.loads(_core.weights_json(T, beta, closed_form))


def named_dgp(name):
    return _json.loads(_core.named_dgp_json(name))


def true_ame(beta, het, kind="AME1", n=1, nodes=64):
    """`het` is a heterogeneity dict (see named_dgp) or a design name."""
    if isinstance(het, str):
        het = named_dgp(het)["het"]
    return _core.true_ame(beta, _json.dumps(het), kind, n, nodes)


def re_mle(histories, model="finite_mixture", seed=20240601, initial="conditional"):
    """`initial` applies to model="nouh": "conditional" on y_1 or "joint"."""
    return _json.loads(_core.re_mle_json(histories, model, seed, initial))


def hausman(consistent, efficient, kind="BETA"):
    """`consistent` and `efficient` are (value, variance) pairs."""
    return _json.loads(_core.hausman_json(consistent[0], consistent[1], efficient[0], efficient[1], kind))


def run_experiment(config):
    """`config` follows the experiment JSON: dgp, N, T, R, estimators, tests, seed, bootstrap_B."""
    return _json.loads(_core.run_experiment_json(_json.dumps(config)))
