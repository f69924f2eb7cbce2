"""Sequence memorization protocols: repeated presentation, cued recall, metrics.

Training presents the stimulus sequence from rest, once per round, with
the target area(s) disinhibited and plasticity on, and applies
homeostasis after every round. During a presentation the stimulus for
position s is clamped on step s, so the target cap for position s fires
on step s+1 (its input is that stimulus plus the previous cap); in the
scaffolded variant the auxiliary area's cap for position s fires one
step later again, fed by the main area.

Recall clamps a single stimulus for exactly one step and lets the areas
run free; the recall fraction at position j is the share of the
reference assembly firing at j's time slot. Every training round's caps
are kept in the trace; the reference defaults to the final round.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Mode, Network
from .graphgen import ModelParams

MAIN_AREA = "A"
AUX_AREA = "B"
INPUT_AREA = "S"


@dataclass
class SequenceTrace:
    """Per-round, per-position caps for each recorded area."""

    length: int
    rounds: list[dict[str, list[np.ndarray]]] = field(default_factory=list)

    def assemblies(self, area: str = MAIN_AREA, round_index: int = -1) -> list[np.ndarray]:
        return self.rounds[round_index][area]

    def stable_from_round_two(self, area: str = MAIN_AREA) -> bool:
        """True when every position's cap is unchanged from round 2 onward."""
        for t in range(1, len(self.rounds)):
            prev, cur = self.rounds[t - 1][area], self.rounds[t][area]
            if any(not np.array_equal(a, b) for a, b in zip(prev, cur)):
                return False
        return True


@dataclass
class RecallReport:
    """Recall fraction per (area, position) and reference assembly overlap."""

    start: int
    recall: dict[str, dict[int, float]]
    max_overlap: float

    def last(self, area: str = MAIN_AREA) -> float:
        positions = self.recall[area]
        return positions[max(positions)]


@dataclass
class SequenceResult:
    network: Network
    trace: SequenceTrace
    stimuli: list[np.ndarray]
    scaffold: bool

    def recall(self, start: int = 1, round_index: int = -1) -> RecallReport:
        if not self.trace.rounds:
            raise ValueError("no training rounds recorded; nothing to recall against")
        return cued_recall(self.network, self.stimuli, start,
                           self.reference(round_index), scaffold=self.scaffold)

    def reference(self, round_index: int = -1) -> dict[str, list[np.ndarray]]:
        return dict(self.trace.rounds[round_index])


def max_overlap(assemblies: list[np.ndarray], k: int) -> float:
    """Largest pairwise intersection fraction among recorded assemblies."""
    best = 0
    for i in range(len(assemblies)):
        for j in range(i + 1, len(assemblies)):
            best = max(best, np.intersect1d(assemblies[i], assemblies[j],
                                            assume_unique=True).size)
    return best / k


def build_simple_net(params: ModelParams, seed: int) -> Network:
    net = Network(seed, params.beta)
    net.add_input_area(INPUT_AREA, params.n, params.k)
    net.add_area(MAIN_AREA, params.n, params.k, params.p)
    net.add_fiber(INPUT_AREA, MAIN_AREA, params.p)
    net.areas[MAIN_AREA].inhibited = False
    net.remember_gates()
    net.homeostasis()
    return net


def build_scaffold_net(params: ModelParams, seed: int) -> Network:
    # Only the main area receives the stimulus; the auxiliary area is
    # driven through the reciprocal fibers alone.
    net = Network(seed, params.beta)
    net.add_input_area(INPUT_AREA, params.n, params.k)
    net.add_area(MAIN_AREA, params.n, params.k, params.p)
    net.add_area(AUX_AREA, params.n, params.k, params.p)
    net.add_fiber(INPUT_AREA, MAIN_AREA, params.p)
    net.add_fiber(MAIN_AREA, AUX_AREA, params.p)
    net.add_fiber(AUX_AREA, MAIN_AREA, params.p)
    net.areas[MAIN_AREA].inhibited = False
    net.areas[AUX_AREA].inhibited = False
    net.remember_gates()
    net.homeostasis()
    return net


def _present_once(net, stimuli, scaffold):
    """One presentation from rest; returns the caps recorded per area."""
    length = len(stimuli)
    net.reset_to_rest()
    caps = {MAIN_AREA: []}
    if scaffold:
        caps[AUX_AREA] = []
    steps = length + (2 if scaffold else 1)
    for step_index in range(steps):
        clamp = {}
        if step_index < length:
            clamp[INPUT_AREA] = stimuli[step_index]
        fired = net.step(clamp)
        # Position s's main cap fires on step s+1, the auxiliary cap on s+2.
        if step_index >= 1 and len(caps[MAIN_AREA]) < length:
            caps[MAIN_AREA].append(fired[MAIN_AREA])
        if scaffold and step_index >= 2 and len(caps[AUX_AREA]) < length:
            caps[AUX_AREA].append(fired[AUX_AREA])
    return caps


def _train(params, stimuli, presentations, seed, scaffold, round_hook):
    net = build_scaffold_net(params, seed) if scaffold else build_simple_net(params, seed)
    trace = SequenceTrace(length=len(stimuli))
    for round_index in range(presentations):
        caps = _present_once(net, stimuli, scaffold)
        net.homeostasis()
        trace.rounds.append(caps)
        if round_hook is not None:
            round_hook(net, trace, round_index)
    net.reset_to_rest()
    return SequenceResult(net, trace, list(stimuli), scaffold)


def train_simple(params: ModelParams, stimuli: list[np.ndarray], presentations: int,
                 seed: int, round_hook=None) -> SequenceResult:
    """Memorize a sequence in one area fed by the input area."""
    return _train(params, stimuli, presentations, seed, False, round_hook)


def train_scaffold(params: ModelParams, stimuli: list[np.ndarray], presentations: int,
                   seed: int, round_hook=None) -> SequenceResult:
    """Memorize a sequence across two mutually connected areas."""
    return _train(params, stimuli, presentations, seed, True, round_hook)


def cued_recall(net: Network, stimuli: list[np.ndarray], start: int,
                reference: dict[str, list[np.ndarray]], *, scaffold: bool = False,
                ) -> RecallReport:
    """Clamp stimulus ``start`` for one step, run free, score against reference.

    ``start`` is 1-based. Only positions >= start are scored: earlier
    positions have no time slot in the replayed suffix.
    """
    length = len(stimuli)
    if not 1 <= start <= length:
        raise ValueError(f"start must be in 1..{length}, got {start}")
    k = net.areas[MAIN_AREA].k
    previous_mode = net.mode
    net.mode = Mode.EVALUATION
    net.reset_to_rest()

    steps = (length - start + 2) + (1 if scaffold else 0)
    main_caps, aux_caps = [], []
    for step_index in range(steps):
        clamp = {INPUT_AREA: stimuli[start - 1]} if step_index == 0 else {}
        fired = net.step(clamp)
        if step_index >= 1:
            main_caps.append(fired[MAIN_AREA])
        if scaffold and step_index >= 2:
            aux_caps.append(fired[AUX_AREA])

    recall: dict[str, dict[int, float]] = {MAIN_AREA: {}}
    for offset, position in enumerate(range(start, length + 1)):
        ref = reference[MAIN_AREA][position - 1]
        hits = np.intersect1d(main_caps[offset], ref, assume_unique=True).size
        recall[MAIN_AREA][position] = hits / k
    if scaffold:
        recall[AUX_AREA] = {}
        for offset, position in enumerate(range(start, length + 1)):
            ref = reference[AUX_AREA][position - 1]
            hits = np.intersect1d(aux_caps[offset], ref, assume_unique=True).size
            recall[AUX_AREA][position] = hits / k

    net.mode = previous_mode
    net.reset_to_rest()
    return RecallReport(start=start, recall=recall,
                        max_overlap=max_overlap(reference[MAIN_AREA], k))
