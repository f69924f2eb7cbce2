"""capsim: seedable simulator of k-cap assembly dynamics.

Brain areas of n neurons with Bernoulli(p) connectivity fire their k
most-driven neurons each step; multiplicative Hebbian plasticity and
per-round homeostasis let repeated stimulus sequences carve recallable
assembly chains. On top of the kernel sit the sequence-memorization
protocols, finite-state-machine learning and simulation, and a
stack-tape construction that composes into a full Turing machine, plus
a seeded experiment harness emitting CSV.
"""

from .core import Area, Fiber, Mode, Network, ProtocolError, k_cap
from .gates import GateConflictError, GateController, GateRule, alternation_wiring
from .graphgen import (ModelParams, StimulusOverlapError, gen_fiber, gen_recurrent,
                       max_pairwise_overlap, sample_stimuli)
from .streams import child_seed, stream_rng

__version__ = "0.1.0"

__all__ = [
    "Area", "Fiber", "Mode", "Network", "ProtocolError", "k_cap",
    "GateConflictError", "GateController", "GateRule", "alternation_wiring",
    "ModelParams", "StimulusOverlapError", "gen_fiber", "gen_recurrent",
    "max_pairwise_overlap", "sample_stimuli",
    "child_seed", "stream_rng",
    "__version__",
]
