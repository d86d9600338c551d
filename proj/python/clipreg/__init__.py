"""Python bindings for the clipreg C++ core."""

import json

from ._clipreg import *  # noqa: F401,F403
from ._clipreg import decompose as _decompose, verify as _verify, ascend as _ascend


def decompose(config, threads=1):
    """Run a decomposition from a config dict; returns the report as a dict."""
    return json.loads(_decompose(json.dumps(config), threads))


def verify(report):
    """Re-verify a report dict; returns (ok, details)."""
    return _verify(json.dumps(report))


def ascend(quad, d, r, q, target, **budget):
    """Adversarial correlation search; returns the result as a dict."""
    return json.loads(_ascend(quad, d, r, q, list(target), **budget))
