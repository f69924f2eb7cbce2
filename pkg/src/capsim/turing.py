"""Stack-tape halves and Turing machine simulation on top of the FSM network.

A tape half is three brain areas in a cycle (each feeding the next) plus
a symbol area fed by all three. The tape content is a chain of
assemblies, the top living in one area and each deeper cell in the next
area around the cycle, so links only ever form in the forward (top to
bottom) direction. Adding a symbol opens the area before the top for a
window of T rounds while a fresh driver stimulus creates a new cap
there; its concurrent firing with the old top and with the symbol's
assembly wires new-top -> old-top and new-top -> symbol. Deleting opens
the area after the top; the old top's last firing ignites its successor
through the trained forward link, and the successor then sustains
itself on its recurrent weights. Firing any top makes the linked symbol
assembly fire one round later, which is how the tape is read.

The full machine uses ten brain areas: the transition network I, S, A
(the symbol area I doubles as the tape halves' symbol area and as the
write output), a movement area D with one designated set per direction,
and two tape halves of three areas each. The symbol under the head is
the top of the right half: a right move deletes from the right half and
adds the written symbol to the left half; a left move deletes from the
left half and adds the carried symbol to the right half (left moves
never rewrite, so the old head cell is untouched inside the right
half). A half that underflows synthesizes an add of the blank first,
which is the infinite blank tape.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Mode, Network, ProtocolError
from .fsm import (ARC_AREA, INPUT_AREA, STATE_AREA, _assign_sets, _decode,
                  _overlap)
from .gates import GateController, GateRule
from .graphgen import ModelParams, sample_stimuli
from .streams import stream_rng

BLANK = "_"
MOVE_AREA = "D"
LEFT = "L"
RIGHT = "R"


class TmFormatError(ValueError):
    """Malformed machine description."""


class EmptyTapeError(RuntimeError):
    """Delete or read on an empty tape half."""


class TmOutcome(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class TuringMachine:
    """Single-tape machine; left moves must keep the read symbol unchanged."""

    states: tuple[str, ...]
    alphabet: tuple[str, ...]  # includes the blank
    initial: str
    accept: str
    reject: str
    delta: dict[tuple[str, str], tuple[str, str, str]]

    def __post_init__(self):
        terminals = {self.accept, self.reject}
        for name in (self.initial, self.accept, self.reject):
            if name not in self.states:
                raise TmFormatError(f"state {name!r} not declared")
        if BLANK not in self.alphabet:
            raise TmFormatError(f"alphabet must contain the blank {BLANK!r}")
        for (q, sym), (r, rho, d) in self.delta.items():
            if q in terminals:
                raise TmFormatError(f"transition from terminal state {q!r}")
            if q not in self.states or r not in self.states:
                raise TmFormatError(f"transition {q!r} {sym!r} uses unknown state")
            if sym not in self.alphabet or rho not in self.alphabet:
                raise TmFormatError(f"transition {q!r} {sym!r} uses unknown symbol")
            if d not in (LEFT, RIGHT):
                raise TmFormatError(f"direction must be L or R, got {d!r}")
            if d == LEFT and rho != sym:
                raise TmFormatError(
                    f"left move on ({q!r}, {sym!r}) must rewrite the same symbol")
        for q in self.states:
            if q in terminals:
                continue
            for sym in self.alphabet:
                if (q, sym) not in self.delta:
                    raise TmFormatError(f"missing transition for ({q!r}, {sym!r})")

    @property
    def nonterminal_states(self):
        return tuple(q for q in self.states if q not in (self.accept, self.reject))

    @property
    def transitions(self):
        return [(q, sym) for q in self.nonterminal_states for sym in self.alphabet]


def parse_tm(text: str) -> TuringMachine:
    """Parse the line format: headers, then ``q sym -> r rho d`` per transition."""
    headers: dict[str, list[str]] = {}
    delta: dict[tuple[str, str], tuple[str, str, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        if "->" in line:
            left, _, right = line.partition("->")
            lhs, rhs = left.split(), right.split()
            if len(lhs) != 2 or len(rhs) != 3:
                raise TmFormatError(
                    f"line {lineno}: expected 'state symbol -> state symbol direction'")
            key = (lhs[0], lhs[1])
            if key in delta:
                raise TmFormatError(f"line {lineno}: duplicate transition {key}")
            delta[key] = (rhs[0], rhs[1], rhs[2])
        else:
            name, sep, rest = line.partition(":")
            if not sep:
                raise TmFormatError(f"line {lineno}: expected a header or transition")
            headers[name.strip()] = rest.split()
    for required in ("states", "alphabet", "initial", "accept", "reject"):
        if required not in headers:
            raise TmFormatError(f"missing header {required!r}")
    return TuringMachine(
        states=tuple(headers["states"]),
        alphabet=tuple(headers["alphabet"]),
        initial=headers["initial"][0],
        accept=headers["accept"][0],
        reject=headers["reject"][0],
        delta=delta,
    )


def format_tm(tm: TuringMachine) -> str:
    lines = [
        "states: " + " ".join(tm.states),
        "alphabet: " + " ".join(tm.alphabet),
        f"initial: {tm.initial}",
        f"accept: {tm.accept}",
        f"reject: {tm.reject}",
    ]
    for (q, sym), (r, rho, d) in tm.delta.items():
        lines.append(f"{q} {sym} -> {r} {rho} {d}")
    return "\n".join(lines) + "\n"


@dataclass
class ReferenceTmRun:
    outcome: TmOutcome
    steps: int
    trace: list[tuple[str, str, str, str]]  # (state, read, written, direction)
    left: list[str]  # nearest-left cell first
    right: list[str]  # head cell first

    @property
    def tape(self) -> str:
        return "".join(reversed(self.left)) + "".join(self.right)


def reference_tm_run(tm: TuringMachine, string: str, max_steps: int) -> ReferenceTmRun:
    """Exact two-stack execution; the oracle for the assembly simulation."""
    for sym in string:
        if sym not in tm.alphabet:
            raise ValueError(f"symbol {sym!r} outside the machine's alphabet")
    left: list[str] = []
    right: list[str] = list(string)
    state = tm.initial
    trace = []
    steps = 0
    while state not in (tm.accept, tm.reject) and steps < max_steps:
        if not right:
            right.append(BLANK)
        sym = right[0]
        state_next, rho, d = tm.delta[(state, sym)]
        if d == RIGHT:
            right.pop(0)
            left.insert(0, rho)
        else:
            if not left:
                left.append(BLANK)
            right.insert(0, left.pop(0))
        trace.append((state, sym, rho, d))
        state = state_next
        steps += 1
    if state == tm.accept:
        outcome = TmOutcome.ACCEPT
    elif state == tm.reject:
        outcome = TmOutcome.REJECT
    else:
        outcome = TmOutcome.TIMEOUT
    return ReferenceTmRun(outcome, steps, trace, left, right)


def immediate_accept_tm() -> TuringMachine:
    """Accepts at once on the blank it reads from an empty tape."""
    return TuringMachine(("go", "acc", "rej"), (BLANK,), "go", "acc", "rej",
                         {("go", BLANK): ("acc", BLANK, RIGHT)})


def unary_successor_tm() -> TuringMachine:
    """Walks right over a block of 1s and appends one more, then accepts."""
    delta = {
        ("go", "1"): ("go", "1", RIGHT),
        ("go", BLANK): ("acc", "1", RIGHT),
    }
    return TuringMachine(("go", "acc", "rej"), ("1", BLANK), "go", "acc", "rej", delta)


# -- tape half ----------------------------------------------------------


def default_window(n: int, beta: float) -> int:
    """Rounds per tape operation; grows with sqrt(log n) and shrinks with beta."""
    return max(math.ceil(5.0 * math.sqrt(math.log(n)) / beta), 10)


@dataclass
class ChainCell:
    area: str
    cap: np.ndarray
    label: str  # decoded or provided symbol, for logs and bookkeeping checks


@dataclass
class TapeHalf:
    net: Network
    areas: tuple[str, str, str]  # areas[j] feeds areas[(j+1) % 3]
    symbol_area: str
    driver_area: str
    control_area: str
    add_event: str
    delete_event: str
    window: int
    symbol_sets: dict[str, np.ndarray]
    control_sets: dict[str, np.ndarray]
    drivers: list[np.ndarray]
    chain: list[ChainCell] = field(default_factory=list)
    adds_done: int = 0

    def __len__(self):
        return len(self.chain)

    def top(self) -> ChainCell:
        if not self.chain:
            raise EmptyTapeError("tape half is empty")
        return self.chain[0]


def tape_gate_rules(areas, symbol_area, add_event, delete_event, window):
    """The per-area gate logic driven by the control assemblies.

    An add opens the top's area (keeping the old top firing) and the area
    before it (where the new cap forms); a delete opens the area after
    the top. The symbol area opens for one step whenever a tape area
    fires, so the linked symbol assembly fires one round after its cell.
    """
    rules = []
    for j in range(3):
        target = areas[j]
        rules.append(GateRule((add_event, areas[j]), "disinhibit", target, window))
        rules.append(GateRule((add_event, areas[(j + 1) % 3]), "disinhibit", target, window))
        rules.append(GateRule((delete_event, areas[(j - 1) % 3]), "disinhibit", target, window))
        rules.append(GateRule((areas[j],), "disinhibit", symbol_area, 1))
    return rules


def build_tape_half(params: ModelParams, symbols: tuple[str, ...], seed: int, *,
                    window: int | None = None, max_ops: int = 64) -> TapeHalf:
    """Standalone half with its own network and designated symbol sets."""
    net = Network(seed, params.beta)
    half = _attach_tape_half(net, params, "", "SYM", seed, window=window,
                             max_ops=max_ops)
    net.add_area("SYM", params.n, params.k, params.p, recurrent=False)
    for area in half.areas:
        net.add_fiber(area, "SYM", params.p)
    half.symbol_sets = _assign_sets(params.n, params.k, symbols,
                                    stream_rng(seed, "assign", "tape-symbols"))
    net.controller = GateController(
        tape_gate_rules(half.areas, "SYM", half.add_event, half.delete_event,
                        half.window))
    net.remember_gates()
    net.homeostasis()
    return half


def _attach_tape_half(net, params, prefix, symbol_area, seed, *, window, max_ops):
    """Create the three cyclic areas plus driver/control input areas on ``net``."""
    names = tuple(f"{prefix}H{j + 1}" for j in range(3))
    for name in names:
        net.add_area(name, params.n, params.k, params.p)
    for j in range(3):
        net.add_fiber(names[j], names[(j + 1) % 3], params.p)
    driver = f"{prefix}E"
    control = f"{prefix}C"
    net.add_input_area(driver, params.n, params.k)
    net.add_input_area(control, params.n, params.k)
    # Driver synapses stay fixed: the stimuli are scaffolding whose raw
    # projection re-selects the same cap every round; letting them
    # strengthen would crowd out the chain links on the cells' budgets.
    for name in names:
        net.add_fiber(driver, name, params.p).plastic = False

    delta = min(params.k, int(6 * math.log(params.n)))
    drivers = sample_stimuli(params.n, params.k, max_ops, max(1, delta),
                             stream_rng(seed, "drivers", prefix))
    control_sets = dict(zip(("add", "delete"),
                            sample_stimuli(params.n, params.k, 2, 0,
                                           stream_rng(seed, "controls", prefix))))
    add_event, delete_event = f"{control}.add", f"{control}.delete"
    net.register_assembly(add_event, control, control_sets["add"])
    net.register_assembly(delete_event, control, control_sets["delete"])
    if window is None:
        window = default_window(params.n, params.beta)
    return TapeHalf(net=net, areas=names, symbol_area=symbol_area,
                    driver_area=driver, control_area=control,
                    add_event=add_event, delete_event=delete_event,
                    window=window, symbol_sets={}, control_sets=control_sets,
                    drivers=drivers)


def tape_add(half: TapeHalf, symbol: str | None = None,
             symbol_cap: np.ndarray | None = None, label: str | None = None) -> None:
    """Push a symbol: a T-round window creates and wires a fresh top assembly.

    The symbol may be given by name (driving its designated set) or as a
    raw cap from another area's firing, which is how the machine carries
    written and moved symbols.

    Firing is interleaved so no cell ever fires on two consecutive
    rounds: with multiplicative plasticity, a cell firing through a
    whole window compounds its recurrent and driver synapses by
    (1 + beta)^T, and the next homeostasis then crushes every other
    afferent of those neurons, which is exactly what must carry the
    chain. The new cap fires on even rounds, driven by the stimulus;
    odd rounds carry first the symbol assembly (wiring new -> symbol)
    and then the old top (wiring new -> old, the forward link), so
    every link class compounds at the same modest rate.
    """
    net = half.net
    if net.mode is not Mode.TRAINING:
        raise ProtocolError("tape add requires training mode")
    if (symbol is None) == (symbol_cap is None):
        raise ValueError("provide exactly one of symbol, symbol_cap")
    if symbol is not None:
        symbol_cap = half.symbol_sets[symbol]
        label = symbol
    if half.adds_done >= len(half.drivers):
        raise ProtocolError("driver stimuli exhausted; raise max_ops")
    driver = half.drivers[half.adds_done]
    half.adds_done += 1

    old_top = None
    if half.chain:
        old_top = half.chain[0]
        target = half.areas[(half.areas.index(old_top.area) - 1) % 3]
        net.step({half.control_area: half.control_sets["add"],
                  old_top.area: old_top.cap})
    else:
        # First cell: nothing can co-fire with the control assembly, so the
        # start area's window is opened directly.
        target = half.areas[0]
        net.areas[target].window = half.window
    # Odd rounds from 3 on carry the posts: symbol first, then old top.
    # The split is the same with or without an old top, so every cell's
    # symbol link compounds equally often.
    odd_rounds = [w for w in range(3, half.window + 1, 2)]
    split = (len(odd_rounds) + 1) // 2
    symbol_rounds = set(odd_rounds[:split])
    link_rounds = set(odd_rounds[split:]) if old_top is not None else set()
    observed = None
    for w in range(1, half.window + 1):
        clamp = {
            half.driver_area: driver,
            half.symbol_area: symbol_cap if w in symbol_rounds else None,
        }
        if w % 2 == 1:
            clamp[target] = None  # the new cap fires on even rounds only
        if old_top is not None:
            clamp[old_top.area] = old_top.cap if w in link_rounds else None
        fired = net.step(clamp)
        if fired[target].size:
            observed = fired[target]
    half.chain.insert(0, ChainCell(target, observed, label or "?"))
    net.homeostasis()
    net.reset_to_rest()


def tape_delete(half: TapeHalf) -> None:
    """Pop the top: its successor ignites through the forward link and takes over.

    Runs with plasticity frozen: a pop is recall, not learning. The
    successor's cap is observed on the ignition round, one step after
    the old top's last firing; the window then runs out per the gate
    logic without carrying further information.
    """
    net = half.net
    top = half.top()
    successor_area = half.areas[(half.areas.index(top.area) + 1) % 3]
    previous_mode = net.mode
    net.mode = Mode.EVALUATION
    net.step({half.control_area: half.control_sets["delete"], top.area: top.cap})
    observed = None
    for w in range(1, half.window + 1):
        fired = net.step({})
        if w == 1:
            observed = fired[successor_area]
    half.chain.pop(0)
    if half.chain:
        # The successor cell's cap is whatever actually fired, not the record.
        half.chain[0].cap = observed
    net.mode = previous_mode
    net.reset_to_rest()


def evoke_symbol_cap(half: TapeHalf) -> np.ndarray:
    """Fire the top for one step and return the symbol-area cap it evokes."""
    net = half.net
    top = half.top()
    previous_mode = net.mode
    net.mode = Mode.EVALUATION
    net.reset_to_rest()
    net.step({top.area: top.cap})
    fired = net.step({})
    net.mode = previous_mode
    net.reset_to_rest()
    return fired[half.symbol_area]


def read_top(half: TapeHalf) -> tuple[str, float]:
    """Decode the top symbol: largest overlap between the evoked cap and a set."""
    cap = evoke_symbol_cap(half)
    if not half.symbol_sets:
        raise ProtocolError("half has no designated symbol sets to decode against")
    label = _decode(cap, half.symbol_sets)
    return label, _overlap(cap, half.symbol_sets[label])


# -- full machine -------------------------------------------------------


@dataclass
class TmNetwork:
    net: Network
    tm: TuringMachine
    params: ModelParams
    state_sets: dict[str, np.ndarray]
    symbol_sets: dict[str, np.ndarray]
    move_sets: dict[str, np.ndarray]
    arc_sets: dict[tuple[str, str], np.ndarray]
    left: TapeHalf
    right: TapeHalf
    arc_caps: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    state_cap: np.ndarray | None = None
    current_state: str = ""
    halted: bool = False


@dataclass
class TmStepLog:
    state: str
    read: str
    next_state: str
    written: str
    direction: str
    overlaps: dict[str, float]

    def line(self) -> str:
        ov = " ".join(f"{k}={v:.2f}" for k, v in self.overlaps.items())
        return (f"{self.state} --{self.read}--> {self.next_state} "
                f"write={self.written} move={self.direction} {ov}")


@dataclass
class TmRunResult:
    outcome: TmOutcome
    steps: int
    log: list[TmStepLog]
    left: list[str]
    right: list[str]

    @property
    def tape(self) -> str:
        return "".join(reversed(self.left)) + "".join(self.right)


def build_tm_network(tm: TuringMachine, params: ModelParams, seed: int, *,
                     window: int | None = None, max_ops: int = 64) -> TmNetwork:
    """Ten brain areas: I, S, A, D plus two three-area tape halves."""
    if window is None:
        window = default_window(params.n, params.beta)
    advisory = 2 * max(window ** 2,
                       (len(tm.states) * len(tm.alphabet)) ** 2)
    if params.n < advisory:
        warnings.warn(
            f"n={params.n} below the sizing guide 2*max(T^2, |Q|^2|S|^2)="
            f"{advisory}; simulation may be unreliable", stacklevel=2)
    net = Network(seed, params.beta)
    net.add_area(INPUT_AREA, params.n, params.k, params.p, recurrent=False)
    net.add_area(STATE_AREA, params.n, params.k, params.p)
    net.add_area(ARC_AREA, params.n, params.k, params.p)
    net.add_area(MOVE_AREA, params.n, params.k, params.p)
    net.add_fiber(INPUT_AREA, ARC_AREA, params.p)
    net.add_fiber(STATE_AREA, ARC_AREA, params.p)
    net.add_fiber(ARC_AREA, STATE_AREA, params.p)
    net.add_fiber(ARC_AREA, INPUT_AREA, params.p)
    net.add_fiber(ARC_AREA, MOVE_AREA, params.p)

    left = _attach_tape_half(net, params, "L", INPUT_AREA, seed,
                             window=window, max_ops=max_ops)
    right = _attach_tape_half(net, params, "R", INPUT_AREA, seed,
                              window=window, max_ops=max_ops)
    for half in (left, right):
        for area in half.areas:
            net.add_fiber(area, INPUT_AREA, params.p)

    state_sets = _assign_sets(params.n, params.k, tm.states,
                              stream_rng(seed, "assign", "states"))
    symbol_sets = _assign_sets(params.n, params.k, tm.alphabet,
                               stream_rng(seed, "assign", "symbols"))
    move_sets = _assign_sets(params.n, params.k, (LEFT, RIGHT),
                             stream_rng(seed, "assign", "moves"))
    arc_sets = _assign_sets(params.n, params.k, tm.transitions,
                            stream_rng(seed, "assign", "arcs"))
    left.symbol_sets = symbol_sets
    right.symbol_sets = symbol_sets

    rules = [
        GateRule((STATE_AREA,), "inhibit", STATE_AREA),
        GateRule((STATE_AREA,), "disinhibit", ARC_AREA, 1),
        GateRule((ARC_AREA,), "inhibit", ARC_AREA),
        GateRule((ARC_AREA,), "disinhibit", STATE_AREA, 1),
        GateRule((ARC_AREA,), "disinhibit", INPUT_AREA, 1),
        GateRule((ARC_AREA,), "disinhibit", MOVE_AREA, 1),
    ]
    for half in (left, right):
        rules += tape_gate_rules(half.areas, INPUT_AREA, half.add_event,
                                 half.delete_event, half.window)
    net.controller = GateController(rules)
    net.remember_gates()
    net.homeostasis()
    return TmNetwork(net, tm, params, state_sets, symbol_sets, move_sets,
                     arc_sets, left, right)


def train_tm(tm: TuringMachine, params: ModelParams, presentations: int, seed: int,
             *, window: int | None = None, max_ops: int = 64) -> TmNetwork:
    """Wire every transition (q, sym) -> (next state, write, move) by presentation.

    Each presentation fires (state + symbol) -> arc cap -> the three
    outputs clamped together, exactly the transducer mechanism with the
    state, write, and movement areas as outputs.
    """
    tmnet = build_tm_network(tm, params, seed, window=window, max_ops=max_ops)
    net = tmnet.net
    transitions = tm.transitions
    order_rng = stream_rng(seed, "schedule")
    for _ in range(presentations):
        for index in order_rng.permutation(len(transitions)):
            q, sym = transitions[index]
            r, rho, d = tm.delta[(q, sym)]
            net.reset_to_rest()
            net.step({STATE_AREA: tmnet.state_sets[q],
                      INPUT_AREA: tmnet.symbol_sets[sym]})
            fired = net.step({ARC_AREA: tmnet.arc_sets[(q, sym)]})
            tmnet.arc_caps[(q, sym)] = fired[ARC_AREA]
            net.step({STATE_AREA: tmnet.state_sets[r],
                      INPUT_AREA: tmnet.symbol_sets[rho],
                      MOVE_AREA: tmnet.move_sets[d]})
            net.homeostasis()
    net.reset_to_rest()
    tmnet.state_cap = tmnet.state_sets[tm.initial]
    tmnet.current_state = tm.initial
    return tmnet


def load_input(tmnet: TmNetwork, string: str) -> None:
    """Write the input on the right half, first symbol on top; left half empty."""
    for sym in string:
        if sym not in tmnet.symbol_sets:
            raise ValueError(f"symbol {sym!r} outside the machine's alphabet")
    for sym in reversed(string):
        tape_add(tmnet.right, symbol=sym)


def tm_step(tmnet: TmNetwork) -> TmStepLog | None:
    """One head step: read, transition, then the two tape-half operations.

    No-op when the machine has halted. The movement command is taken from
    the movement area's cap; the carried symbol caps are whatever the
    network itself fires, so decoding errors propagate honestly.
    """
    if tmnet.halted:
        return None
    net, tm = tmnet.net, tmnet.tm
    if not tmnet.right.chain:
        tape_add(tmnet.right, symbol=BLANK)

    # Read and transit with plasticity frozen: rerunning a transition with
    # learning on would recompound its links every head step until it
    # hijacks the other transitions out of the same state.
    previous_mode = net.mode
    net.mode = Mode.EVALUATION
    net.reset_to_rest()
    top = tmnet.right.top()
    net.step({top.area: top.cap})
    fired = net.step({STATE_AREA: tmnet.state_cap})
    read_cap = fired[INPUT_AREA]
    fired = net.step({})
    arc_cap = fired[ARC_AREA]
    fired = net.step({})
    next_state_cap = fired[STATE_AREA]
    write_cap = fired[INPUT_AREA]
    move_cap = fired[MOVE_AREA]
    net.mode = previous_mode
    net.reset_to_rest()

    state = tmnet.current_state
    read_sym = _decode(read_cap, tmnet.symbol_sets)
    next_state = _decode(next_state_cap, tmnet.state_sets)
    write_sym = _decode(write_cap, tmnet.symbol_sets)
    direction = _decode(move_cap, tmnet.move_sets)
    overlaps = {
        "read": _overlap(read_cap, tmnet.symbol_sets[read_sym]),
        "state": _overlap(next_state_cap, tmnet.state_sets[next_state]),
        "write": _overlap(write_cap, tmnet.symbol_sets[write_sym]),
        "move": _overlap(move_cap, tmnet.move_sets[direction]),
    }
    if (state, read_sym) in tmnet.arc_caps:
        overlaps["arc"] = _overlap(arc_cap, tmnet.arc_caps[(state, read_sym)])

    if direction == RIGHT:
        tape_delete(tmnet.right)
        tape_add(tmnet.left, symbol_cap=write_cap, label=write_sym)
    else:
        if not tmnet.left.chain:
            tape_add(tmnet.left, symbol=BLANK)
        carried = evoke_symbol_cap(tmnet.left)
        carried_label = _decode(carried, tmnet.symbol_sets)
        tape_delete(tmnet.left)
        tape_add(tmnet.right, symbol_cap=carried, label=carried_label)

    tmnet.state_cap = next_state_cap
    tmnet.current_state = next_state
    if next_state in (tm.accept, tm.reject):
        tmnet.halted = True
    return TmStepLog(state, read_sym, next_state, write_sym, direction, overlaps)


def run_tm(tmnet: TmNetwork, string: str, max_steps: int) -> TmRunResult:
    """Load the input, iterate head steps, then read the final tape destructively."""
    load_input(tmnet, string)
    log = []
    steps = 0
    while not tmnet.halted and steps < max_steps:
        entry = tm_step(tmnet)
        log.append(entry)
        steps += 1
    if tmnet.current_state == tmnet.tm.accept:
        outcome = TmOutcome.ACCEPT
    elif tmnet.current_state == tmnet.tm.reject:
        outcome = TmOutcome.REJECT
    else:
        outcome = TmOutcome.TIMEOUT
    left_syms, right_syms = [], []
    for half, out in ((tmnet.left, left_syms), (tmnet.right, right_syms)):
        while half.chain:
            out.append(read_top(half)[0])
            tape_delete(half)
    return TmRunResult(outcome, steps, log, left_syms, right_syms)
