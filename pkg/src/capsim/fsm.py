"""Finite state machines: text format, reference interpreter, assembly network.

A machine's network has an input area I holding one designated k-set
per symbol, a state area S holding one per state, and an arc area A
holding one per transition. Training presents each transition as the
three-step firing chain (state + symbol) -> arc -> next state, all
three firings driven, with plasticity on and homeostasis after each
presentation; this burns the pair -> arc and arc -> successor links.
During simulation everything past the clamped symbols runs free, and
the k-caps recover the designated sets. Gating alternates S and A:
each one's firing opens the other for the next step, so state caps
fire on odd rounds and arc caps on even rounds.

Driving the arc's designated set during training (rather than letting
a free cap form) matters: transitions sharing a state or symbol train
the shared component's edges once per sibling per epoch, so free caps
compound toward each other and merge. Designated arcs pin the targets;
free recall then recovers them cleanly.

A transducer adds an output area B with a designated set per output
symbol, driven together with the next state during training.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Mode, Network
from .gates import GateController, GateRule
from .graphgen import ModelParams, sample_stimuli
from .streams import stream_rng

TERMINAL = "#"

INPUT_AREA = "I"
STATE_AREA = "S"
ARC_AREA = "A"
OUTPUT_AREA = "B"


class FsmFormatError(ValueError):
    """Malformed machine description."""


@dataclass(frozen=True)
class Fsm:
    """States, alphabet (with the terminal symbol), transition table, outputs."""

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    initial: str
    accept: str
    reject: str
    delta: dict[tuple[str, str], str]
    outputs: dict[tuple[str, str], str] | None = None

    def __post_init__(self):
        terminals = {self.accept, self.reject}
        for name in (self.initial, self.accept, self.reject):
            if name not in self.states:
                raise FsmFormatError(f"state {name!r} not declared")
        if TERMINAL not in self.alphabet:
            raise FsmFormatError(f"alphabet must contain the terminal symbol {TERMINAL!r}")
        for (q, sym), r in self.delta.items():
            if q in terminals:
                raise FsmFormatError(f"transition from terminal state {q!r}")
            if q not in self.states or r not in self.states:
                raise FsmFormatError(f"transition {q!r} {sym!r} -> {r!r} uses unknown state")
            if sym not in self.alphabet:
                raise FsmFormatError(f"transition on unknown symbol {sym!r}")
        for q in self.states:
            if q in terminals:
                continue
            for sym in self.alphabet:
                if (q, sym) not in self.delta:
                    raise FsmFormatError(f"missing transition for ({q!r}, {sym!r})")
            if self.delta[(q, TERMINAL)] not in terminals:
                raise FsmFormatError(
                    f"transition ({q!r}, {TERMINAL!r}) must reach accept or reject")
        if self.outputs is not None:
            for key in self.outputs:
                if key not in self.delta:
                    raise FsmFormatError(f"output attached to unknown transition {key}")

    @property
    def nonterminal_states(self) -> tuple[str, ...]:
        return tuple(q for q in self.states if q not in (self.accept, self.reject))

    @property
    def transitions(self) -> list[tuple[str, str]]:
        return [(q, sym) for q in self.nonterminal_states for sym in self.alphabet]

    @property
    def output_symbols(self) -> tuple[str, ...]:
        if not self.outputs:
            return ()
        seen = []
        for key in sorted(self.outputs):
            gamma = self.outputs[key]
            if gamma not in seen:
                seen.append(gamma)
        return tuple(seen)


def parse_fsm(text: str) -> Fsm:
    """Parse the line-oriented machine format.

    Headers ``states:``, ``alphabet:``, ``initial:``, ``accept:``,
    ``reject:``, then one ``q sym -> r`` line per transition, with an
    optional ``/ gamma`` output suffix. ``#`` is the terminal symbol.
    """
    headers: dict[str, list[str]] = {}
    delta: dict[tuple[str, str], str] = {}
    outputs: dict[tuple[str, str], str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        if "->" in line:
            left, _, right = line.partition("->")
            lhs = left.split()
            if len(lhs) != 2:
                raise FsmFormatError(f"line {lineno}: expected 'state symbol -> state'")
            rhs = right.split()
            if len(rhs) == 1:
                target, gamma = rhs[0], None
            elif len(rhs) == 3 and rhs[1] == "/":
                target, gamma = rhs[0], rhs[2]
            else:
                raise FsmFormatError(f"line {lineno}: bad transition right-hand side")
            key = (lhs[0], lhs[1])
            if key in delta:
                raise FsmFormatError(f"line {lineno}: duplicate transition {key}")
            delta[key] = target
            if gamma is not None:
                outputs[key] = gamma
        else:
            name, _, rest = line.partition(":")
            if not _:
                raise FsmFormatError(f"line {lineno}: expected a header or transition")
            headers[name.strip()] = rest.split()
    for required in ("states", "alphabet", "initial", "accept", "reject"):
        if required not in headers:
            raise FsmFormatError(f"missing header {required!r}")
    for single in ("initial", "accept", "reject"):
        if len(headers[single]) != 1:
            raise FsmFormatError(f"header {single!r} must name exactly one state")
    return Fsm(
        states=tuple(headers["states"]),
        alphabet=tuple(headers["alphabet"]),
        initial=headers["initial"][0],
        accept=headers["accept"][0],
        reject=headers["reject"][0],
        delta=delta,
        outputs=outputs or None,
    )


def format_fsm(fsm: Fsm) -> str:
    lines = [
        "states: " + " ".join(fsm.states),
        "alphabet: " + " ".join(fsm.alphabet),
        f"initial: {fsm.initial}",
        f"accept: {fsm.accept}",
        f"reject: {fsm.reject}",
    ]
    for (q, sym), r in fsm.delta.items():
        suffix = ""
        if fsm.outputs and (q, sym) in fsm.outputs:
            suffix = f" / {fsm.outputs[(q, sym)]}"
        lines.append(f"{q} {sym} -> {r}{suffix}")
    return "\n".join(lines) + "\n"


def reference_run(fsm: Fsm, string: str) -> tuple[bool, list[str]]:
    """Exact symbolic execution; returns (accepted, state trace incl. terminal)."""
    if TERMINAL in string:
        raise ValueError("terminal symbol may only end the string")
    state = fsm.initial
    trace = [state]
    for sym in list(string) + [TERMINAL]:
        if sym not in fsm.alphabet:
            raise ValueError(f"symbol {sym!r} outside the machine's alphabet")
        state = fsm.delta[(state, sym)]
        trace.append(state)
    return state == fsm.accept, trace


def even_zeros_fsm() -> Fsm:
    """Accepts binary strings containing an even number of zeros."""
    delta = {
        ("even", "0"): "odd", ("even", "1"): "even", ("even", TERMINAL): "acc",
        ("odd", "0"): "even", ("odd", "1"): "odd", ("odd", TERMINAL): "rej",
    }
    return Fsm(("even", "odd", "acc", "rej"), ("0", "1", TERMINAL),
               "even", "acc", "rej", delta)


def divisible_by_3_fsm() -> Fsm:
    """Accepts decimal strings whose value is a multiple of 3 (digit-sum mod 3)."""
    states = ("r0", "r1", "r2", "acc", "rej")
    alphabet = tuple(str(d) for d in range(10)) + (TERMINAL,)
    delta: dict[tuple[str, str], str] = {}
    for residue in range(3):
        for digit in range(10):
            delta[(f"r{residue}", str(digit))] = f"r{(residue + digit) % 3}"
        delta[(f"r{residue}", TERMINAL)] = "acc" if residue == 0 else "rej"
    return Fsm(states, alphabet, "r0", "acc", "rej", delta)


# -- assembly network ---------------------------------------------------


@dataclass
class FsmNetwork:
    net: Network
    fsm: Fsm
    params: ModelParams
    state_sets: dict[str, np.ndarray]
    symbol_sets: dict[str, np.ndarray]
    arc_sets: dict[tuple[str, str], np.ndarray]
    output_sets: dict[str, np.ndarray] = field(default_factory=dict)
    arc_caps: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    presentations: int = 0


@dataclass
class FsmSimResult:
    accepted: bool
    decided_state: str
    rounds: int
    overlaps: list[tuple[int, str, str, float]]  # (round, phase, expected label, fraction)
    fired_rounds: dict[str, list[int]]  # area -> rounds on which it fired

    def min_overlap(self, phase: str | None = None) -> float:
        values = [frac for _, ph, _, frac in self.overlaps if phase in (None, ph)]
        return min(values) if values else float("nan")


def _assign_sets(n, k, labels, rng):
    delta = 0 if k * len(labels) <= n else max(1, int(6 * math.log(n)))
    sets = sample_stimuli(n, k, len(labels), delta, rng)
    return dict(zip(labels, sets))


def _install_alternation(net):
    net.controller = GateController([
        GateRule((STATE_AREA,), "inhibit", STATE_AREA),
        GateRule((STATE_AREA,), "disinhibit", ARC_AREA, 1),
        GateRule((ARC_AREA,), "inhibit", ARC_AREA),
        GateRule((ARC_AREA,), "disinhibit", STATE_AREA, 1),
    ])


def build_fsm_network(fsm: Fsm, params: ModelParams, seed: int) -> FsmNetwork:
    """Assemble the untrained network with designated state, symbol, and arc sets."""
    advisory = (len(fsm.states) * len(fsm.alphabet)) ** 2
    if params.n < advisory:
        warnings.warn(
            f"n={params.n} below the sizing guide |Q|^2|S|^2={advisory}; "
            "training may be unreliable", stacklevel=2)
    net = Network(seed, params.beta)
    net.add_input_area(INPUT_AREA, params.n, params.k)
    net.add_area(STATE_AREA, params.n, params.k, params.p)
    net.add_area(ARC_AREA, params.n, params.k, params.p)
    net.add_fiber(INPUT_AREA, ARC_AREA, params.p)
    net.add_fiber(STATE_AREA, ARC_AREA, params.p)
    net.add_fiber(ARC_AREA, STATE_AREA, params.p)

    state_sets = _assign_sets(params.n, params.k, fsm.states,
                              stream_rng(seed, "assign", "states"))
    symbol_sets = _assign_sets(params.n, params.k, fsm.alphabet,
                               stream_rng(seed, "assign", "symbols"))
    arc_sets = _assign_sets(params.n, params.k, fsm.transitions,
                            stream_rng(seed, "assign", "arcs"))
    output_sets = {}
    if fsm.outputs:
        net.add_area(OUTPUT_AREA, params.n, params.k, params.p)
        net.add_fiber(ARC_AREA, OUTPUT_AREA, params.p)
        output_sets = _assign_sets(params.n, params.k, fsm.output_symbols,
                                   stream_rng(seed, "assign", "outputs"))
    _install_alternation(net)
    if fsm.outputs:
        net.controller.add(GateRule((ARC_AREA,), "disinhibit", OUTPUT_AREA, 1))
    net.remember_gates()
    net.homeostasis()
    return FsmNetwork(net, fsm, params, state_sets, symbol_sets, arc_sets,
                      output_sets)


def _present_transition(fsmnet, q, sym):
    net, fsm = fsmnet.net, fsmnet.fsm
    net.reset_to_rest()
    net.step({STATE_AREA: fsmnet.state_sets[q], INPUT_AREA: fsmnet.symbol_sets[sym]})
    fired = net.step({ARC_AREA: fsmnet.arc_sets[(q, sym)]})
    fsmnet.arc_caps[(q, sym)] = fired[ARC_AREA]
    closing = {STATE_AREA: fsmnet.state_sets[fsm.delta[(q, sym)]]}
    if fsm.outputs and (q, sym) in fsm.outputs:
        closing[OUTPUT_AREA] = fsmnet.output_sets[fsm.outputs[(q, sym)]]
    net.step(closing)
    net.homeostasis()


def train_fsm(fsm: Fsm, params: ModelParams, presentations: int, seed: int,
              *, schedule: str = "shuffled", epoch_hook=None) -> FsmNetwork:
    """Train every transition ``presentations`` times from rest.

    The default schedule presents all transitions once per epoch in a
    fresh shuffled order, for ``presentations`` epochs; ``blocked``
    repeats each transition consecutively instead.
    """
    if schedule not in ("shuffled", "blocked"):
        raise ValueError(f"unknown schedule {schedule!r}")
    fsmnet = build_fsm_network(fsm, params, seed)
    transitions = fsmnet.fsm.transitions
    order_rng = stream_rng(seed, "schedule")
    if schedule == "blocked":
        for q, sym in transitions:
            for _ in range(presentations):
                _present_transition(fsmnet, q, sym)
        fsmnet.presentations = presentations
        if epoch_hook is not None:
            epoch_hook(fsmnet, presentations - 1)
    else:
        for epoch in range(presentations):
            for index in order_rng.permutation(len(transitions)):
                q, sym = transitions[index]
                _present_transition(fsmnet, q, sym)
            fsmnet.presentations = epoch + 1
            if epoch_hook is not None:
                epoch_hook(fsmnet, epoch)
    fsmnet.net.reset_to_rest()
    return fsmnet


def _overlap(cap, reference):
    if reference.size == 0:
        return 0.0
    return np.intersect1d(cap, reference, assume_unique=True).size / reference.size


def _decode(cap, sets, *, prefer: str | None = None):
    """Label whose set overlaps the cap most; ties go to ``prefer`` if present."""
    best_label, best_hits = None, -1
    for label in sets:
        hits = np.intersect1d(cap, sets[label], assume_unique=True).size
        if hits > best_hits or (hits == best_hits and label == prefer):
            best_label, best_hits = label, hits
    return best_label


def simulate_string(fsmnet: FsmNetwork, string: str) -> FsmSimResult:
    """Drive the trained network with a string and decide by the final state cap.

    The initial state set is clamped on round 1 together with the first
    symbol; symbol i is clamped on round 2i-1; everything else runs on
    learned weights under alternation gating. The decision is the state
    set with the largest intersection with the final state-area cap,
    with ties resolved toward reject.
    """
    net, fsm = fsmnet.net, fsmnet.fsm
    symbols = list(string) + [TERMINAL]
    for sym in symbols:
        if sym not in fsmnet.symbol_sets:
            raise ValueError(f"symbol {sym!r} has no assigned assembly")
    _, expected_states = reference_run(fsm, string)

    previous_mode = net.mode
    net.mode = Mode.EVALUATION
    net.reset_to_rest()
    overlaps = []
    fired_rounds: dict[str, list[int]] = {name: [] for name in net.areas}

    def log(step_fired, round_index):
        for name, cap in step_fired.items():
            if cap.size:
                fired_rounds[name].append(round_index)

    fired = net.step({STATE_AREA: fsmnet.state_sets[fsm.initial],
                      INPUT_AREA: fsmnet.symbol_sets[symbols[0]]})
    final_cap = fired[STATE_AREA]
    round_index = 1
    log(fired, round_index)
    for i, sym in enumerate(symbols):
        # Arc cap for (q_i, sym) on the even round.
        fired = net.step({})
        round_index += 1
        log(fired, round_index)
        expected_arc = (expected_states[i], sym)
        if expected_arc in fsmnet.arc_caps:
            overlaps.append((round_index, "arc", f"{expected_arc[0]},{sym}",
                             _overlap(fired[ARC_AREA], fsmnet.arc_caps[expected_arc])))
        # Next state cap on the odd round; clamp the next symbol alongside.
        clamp = {}
        if i + 1 < len(symbols):
            clamp[INPUT_AREA] = fsmnet.symbol_sets[symbols[i + 1]]
        fired = net.step(clamp)
        round_index += 1
        log(fired, round_index)
        expected = expected_states[i + 1]
        overlaps.append((round_index, "state", expected,
                         _overlap(fired[STATE_AREA], fsmnet.state_sets[expected])))
        final_cap = fired[STATE_AREA]

    decided = _decode(final_cap, fsmnet.state_sets, prefer=fsm.reject)
    net.mode = previous_mode
    net.reset_to_rest()
    return FsmSimResult(accepted=decided == fsm.accept, decided_state=decided,
                        rounds=round_index, overlaps=overlaps,
                        fired_rounds=fired_rounds)


def transition_recall(fsmnet: FsmNetwork) -> dict[tuple[str, str], float]:
    """Fraction of each next-state set firing two rounds after its (q, sym) pair."""
    net, fsm = fsmnet.net, fsmnet.fsm
    previous_mode = net.mode
    net.mode = Mode.EVALUATION
    recalls = {}
    for q, sym in fsm.transitions:
        net.reset_to_rest()
        net.step({STATE_AREA: fsmnet.state_sets[q], INPUT_AREA: fsmnet.symbol_sets[sym]})
        net.step({})
        fired = net.step({})
        target = fsmnet.state_sets[fsm.delta[(q, sym)]]
        recalls[(q, sym)] = _overlap(fired[STATE_AREA], target)
    net.mode = previous_mode
    net.reset_to_rest()
    return recalls


def output_recall(fsmnet: FsmNetwork) -> dict[tuple[str, str], float]:
    """Transducer check: fraction of each output set firing two rounds after (q, sym)."""
    net, fsm = fsmnet.net, fsmnet.fsm
    if not fsm.outputs:
        raise ValueError("machine has no output function")
    previous_mode = net.mode
    net.mode = Mode.EVALUATION
    recalls = {}
    for (q, sym), gamma in fsm.outputs.items():
        net.reset_to_rest()
        net.step({STATE_AREA: fsmnet.state_sets[q], INPUT_AREA: fsmnet.symbol_sets[sym]})
        net.step({})
        fired = net.step({})
        recalls[(q, sym)] = _overlap(fired[OUTPUT_AREA], fsmnet.output_sets[gamma])
    net.mode = previous_mode
    net.reset_to_rest()
    return recalls
