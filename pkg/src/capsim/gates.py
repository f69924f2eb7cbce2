"""Interneuron gate logic: event-driven inhibition and disinhibition of areas.

Gate populations integrate much faster than excitatory neurons, so they
are modeled as deterministic rules over the step's firing events rather
than as simulated cells: flags set from step-t events shape step t+1
excitatory firing, never later. A rule fires when all its watched
events (area names or registered assembly names that fired) occurred on
the step; its action either latches an area's base gate flag (duration
None) or opens a timed window of exactly ``duration`` subsequent steps.
"""

from __future__ import annotations

from dataclasses import dataclass


class GateConflictError(RuntimeError):
    """Two rules demanded opposite gate actions on one area in one step."""


@dataclass(frozen=True)
class GateRule:
    when: tuple[str, ...]  # conjunction of fired-event names
    action: str  # "disinhibit" | "inhibit"
    target: str
    duration: int | None = None  # None latches until changed; else open for N steps

    def __post_init__(self):
        if self.action not in ("disinhibit", "inhibit"):
            raise ValueError(f"unknown gate action {self.action!r}")
        if self.action == "inhibit" and self.duration is not None:
            raise ValueError("inhibit is a latch; duration not supported")
        if self.duration is not None and self.duration < 1:
            raise ValueError(f"duration must be >= 1, got {self.duration}")

    def to_dict(self):
        return {"when": list(self.when), "action": self.action,
                "target": self.target, "duration": self.duration}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["when"]), d["action"], d["target"], d["duration"])


class GateController:
    """Ordered rule list applied to a network after each step's events."""

    def __init__(self, rules=()):
        self.rules: list[GateRule] = list(rules)

    def add(self, rule: GateRule) -> None:
        self.rules.append(rule)

    def apply(self, net, fired: set[str]) -> None:
        """Evaluate rules against the step's fired events and update gate flags.

        Rules are evaluated in declaration order. Conflicting actions on
        one area are an error (a protocol bug), not last-writer-wins;
        duplicate disinhibits keep the longest window.
        """
        actions: dict[str, tuple[str, int | None]] = {}
        for rule in self.rules:
            if not all(event in fired for event in rule.when):
                continue
            if rule.target not in net.areas:
                raise GateConflictError(f"gate rule targets unknown area {rule.target!r}")
            prior = actions.get(rule.target)
            if prior is None:
                actions[rule.target] = (rule.action, rule.duration)
            elif prior[0] != rule.action:
                raise GateConflictError(
                    f"simultaneous inhibit and disinhibit on area {rule.target!r}"
                )
            elif rule.action == "disinhibit":
                best = _longest(prior[1], rule.duration)
                actions[rule.target] = (rule.action, best)

        for target, (action, duration) in actions.items():
            area = net.areas[target]
            if action == "inhibit":
                area.inhibited = True
                area.window = 0
            elif duration is None:
                area.inhibited = False
            else:
                area.window = max(area.window, duration)


def _longest(a, b):
    if a is None or b is None:
        return None  # a latch outlasts any window
    return max(a, b)


def alternation_wiring(net, a: str, b: str, s: str) -> GateController:
    """Install the two-area alternation circuit and return its controller.

    Requires fibers a <-> b and s feeding both. Each area's firing closes
    itself and opens the partner for one step; initially ``a`` is open and
    ``b`` closed, so caps land in ``a`` on odd firing positions and in
    ``b`` on even ones, for any stimulus schedule.
    """
    for edge in [(a, b), (b, a), (s, a), (s, b)]:
        if edge not in net.fibers:
            raise ValueError(f"alternation wiring needs fiber {edge[0]}->{edge[1]}")
    controller = GateController([
        GateRule((a,), "inhibit", a),
        GateRule((a,), "disinhibit", b, 1),
        GateRule((b,), "inhibit", b),
        GateRule((b,), "disinhibit", a, 1),
    ])
    net.areas[a].inhibited = False
    net.areas[b].inhibited = True
    net.controller = controller
    net.remember_gates()
    return controller
