"""Shared helpers for the gate and acceptance tests."""

import numpy as np

from capsim.core import Network
from capsim.gates import alternation_wiring


def alternation_net(seed=17, n=200, k=10, p=0.3, beta=0.1):
    net = Network(seed, beta)
    net.add_input_area("S", n, k)
    net.add_area("A", n, k, p)
    net.add_area("B", n, k, p)
    for src, dst in [("S", "A"), ("S", "B"), ("A", "B"), ("B", "A")]:
        net.add_fiber(src, dst, p)
    alternation_wiring(net, "A", "B", "S")
    net.homeostasis()
    return net


def gate_symbols(net, a="A", b="B"):
    """D_X when X is open for the next step, I_X when closed."""
    out = set()
    for name in (a, b):
        area = net.areas[name]
        out.add(("D_" if area.gate_open else "I_") + name)
    return out


def symbolic_trace(net, stimuli, steps):
    """Per-step symbols: stimulus index, per-area cap labels, gate states.

    Caps are labeled by order of first appearance per area (A1, A2, ...),
    so the trace is comparable symbol-for-symbol.
    """
    labels = {name: [] for name in net.areas if not net.areas[name].is_input}
    rows = []
    for t in range(steps):
        clamp = {"S": stimuli[t]} if t < len(stimuli) else {}
        fired = net.step(clamp)
        row = set()
        if t < len(stimuli):
            row.add(f"S{t + 1}")
        for name, seen in labels.items():
            cap = fired[name]
            if cap.size == 0:
                continue
            for index, old in enumerate(seen):
                if np.array_equal(old, cap):
                    row.add(f"{name}{index + 1}")
                    break
            else:
                seen.append(cap)
                row.add(f"{name}{len(seen)}")
        row |= gate_symbols(net)
        rows.append(row)
    return rows


ALTERNATION_TABLE = [
    {"S1", "D_A", "I_B"},
    {"S2", "A1", "D_B", "I_A"},
    {"S3", "B1", "D_A", "I_B"},
    {"S4", "A2", "D_B", "I_A"},
    {"S5", "B2", "D_A", "I_B"},
]
