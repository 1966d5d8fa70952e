"""Sparse deep ReLU regression posteriors and Bernstein-von Mises diagnostics."""

import json

from . import _sbvm
from ._sbvm import SbvmError

__all__ = ["SbvmError", "bvm", "construct", "coverage", "fit", "forward", "regions", "simulate", "validate_config"]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def validate_config(config):
    _sbvm.validate_config(_text(config))


def simulate(config):
    return _sbvm.simulate(_text(config))


def forward(network, x):
    return _sbvm.forward(_text(network), x)


def regions(network, x):
    return _sbvm.regions(_text(network), x)


def fit(config, x, y):
    out = _sbvm.fit(_text(config), x, y)
    out["summary"] = json.loads(out["summary"])
    if out["final_network"] is not None:
        out["final_network"] = json.loads(out["final_network"])
    return out


def bvm(config, x, y, eps):
    return json.loads(_sbvm.bvm(_text(config), x, y, eps))


def coverage(config, workers=1):
    return json.loads(_sbvm.coverage(_text(config), workers))


def construct(network):
    net, s_star, top_nonzero, s_new, bound = _sbvm.construct(_text(network))
    return {"network": json.loads(net), "s_star": s_star, "top_nonzero": top_nonzero, "s_new": s_new, "bound": bound}
