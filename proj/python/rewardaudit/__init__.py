"""Bias audit toolkit for preference-aligned language models.

The compiled core exposes mock-preference construction, DPO implicit-reward
statistics (selection rates with bootstrap CIs, point-biserial bias transfer,
Cohen's kappa agreement, exact binomial baseline tests), and the Jaccard echo
metric. Score real models in Python (e.g. with transformers), then feed the
summed log-probabilities into ``compare_logprobs`` and the statistics here.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:  # pragma: no cover - dev tree with an out-of-package build
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
