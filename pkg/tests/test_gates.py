import numpy as np
import pytest

from capsim.core import Network
from capsim.gates import GateConflictError, GateController, GateRule, alternation_wiring
from capsim.graphgen import sample_stimuli
from capsim.streams import stream_rng
from support import ALTERNATION_TABLE, alternation_net, symbolic_trace


def test_alternation_firing_table_exact():
    net = alternation_net()
    stimuli = sample_stimuli(200, 10, 5, 0, stream_rng(1, "stimuli"))
    rows = symbolic_trace(net, stimuli, 5)
    assert rows == ALTERNATION_TABLE


def test_alternation_zero_stimuli_stays_at_rest():
    net = alternation_net()
    for _ in range(10):
        fired = net.step({})
        assert fired["A"].size == 0 and fired["B"].size == 0


def test_alternation_parity_over_random_schedules():
    # Any stimulus schedule: every firing in A has odd firing index, B even.
    rng = np.random.default_rng(5)
    for trial in range(100):
        net = alternation_net(seed=trial)
        stimuli = sample_stimuli(200, 10, 6, 0, stream_rng(trial, "stimuli"))
        order = []
        steps = int(rng.integers(6, 14))
        schedule = rng.random(steps) < 0.6
        for t in range(steps):
            clamp = {"S": stimuli[int(rng.integers(0, 6))]} if schedule[t] else {}
            fired = net.step(clamp)
            if fired["A"].size:
                order.append("A")
            if fired["B"].size:
                order.append("B")
        for index, area in enumerate(order):
            assert area == ("A" if index % 2 == 0 else "B")


def test_alternation_requires_fibers():
    net = Network(0, 0.1)
    net.add_input_area("S", 50, 5)
    net.add_area("A", 50, 5, 0.3)
    net.add_area("B", 50, 5, 0.3)
    with pytest.raises(ValueError):
        alternation_wiring(net, "A", "B", "S")


class TestGateController:
    def make_net(self):
        net = Network(0, 0.1)
        net.add_input_area("C", 30, 3)
        net.add_area("H1", 30, 3, 0.3)
        net.add_area("H2", 30, 3, 0.3)
        net.register_assembly("C.go", "C", np.array([0, 1, 2]))
        net.remember_gates()
        return net

    def test_no_matching_events_leaves_flags(self):
        net = self.make_net()
        net.controller = GateController([GateRule(("C.go",), "disinhibit", "H1", 2)])
        net.step({})
        assert not net.areas["H1"].gate_open

    def test_window_open_exact_steps(self):
        net = self.make_net()
        net.controller = GateController([GateRule(("C.go",), "disinhibit", "H2", 3)])
        net.step({"C": np.array([0, 1, 2])})
        opens = []
        for _ in range(5):
            opens.append(net.areas["H2"].gate_open)
            net.step({})
        assert opens == [True, True, True, False, False]

    def test_assembly_event_requires_majority(self):
        net = self.make_net()
        net.controller = GateController([GateRule(("C.go",), "disinhibit", "H1", 1)])
        net.step({"C": np.array([0])})  # 1 of 3 < half
        assert not net.areas["H1"].gate_open
        net.step({"C": np.array([0, 1])})  # 2 of 3 >= half
        assert net.areas["H1"].gate_open

    def test_conjunction(self):
        net = self.make_net()
        net.controller = GateController(
            [GateRule(("C.go", "H1"), "disinhibit", "H2", 1)])
        net.step({"C": np.array([0, 1, 2])})
        assert not net.areas["H2"].gate_open
        net.step({"C": np.array([0, 1, 2]), "H1": np.array([4, 5, 6])})
        assert net.areas["H2"].gate_open

    def test_conflict_raises(self):
        net = self.make_net()
        net.controller = GateController([
            GateRule(("C.go",), "disinhibit", "H1", 1),
            GateRule(("C.go",), "inhibit", "H1"),
        ])
        with pytest.raises(GateConflictError):
            net.step({"C": np.array([0, 1, 2])})

    def test_duplicate_disinhibit_keeps_longest(self):
        net = self.make_net()
        net.controller = GateController([
            GateRule(("C.go",), "disinhibit", "H1", 1),
            GateRule(("C.go",), "disinhibit", "H1", 4),
        ])
        net.step({"C": np.array([0, 1, 2])})
        assert net.areas["H1"].window == 4

    def test_instantaneity_next_step_only(self):
        # A rule firing at step t opens the target at t+1, not t or t+2.
        net = self.make_net()
        net.areas["H1"].weights[:] = 1.0
        np.fill_diagonal(net.areas["H1"].weights, 0.0)
        net.controller = GateController([GateRule(("C.go",), "disinhibit", "H1", 1)])
        net.homeostasis()
        fired = net.step({"C": np.array([0, 1, 2]), "H1": np.array([7, 8, 9])})
        assert fired["H1"].size  # clamped this step
        fired = net.step({})
        assert fired["H1"].size == 3  # open now, driven by last step's firing
        fired = net.step({})
        assert fired["H1"].size == 0  # window expired

    def test_rule_validation(self):
        with pytest.raises(ValueError):
            GateRule(("x",), "open", "H1", 1)
        with pytest.raises(ValueError):
            GateRule(("x",), "disinhibit", "H1", 0)
        with pytest.raises(ValueError):
            GateRule(("x",), "inhibit", "H1", 2)


def test_tape_controller_hand_schedule():
    # Five scripted operations against the three-area cyclic gate logic,
    # checked against a hand-derived open-area schedule (window 2).
    from capsim.turing import tape_gate_rules

    net = Network(0, 0.1)
    for name in ("H1", "H2", "H3", "SYM"):
        net.add_area(name, 30, 3, 0.3)
    net.add_input_area("C", 30, 3)
    net.register_assembly("C.add", "C", np.array([0, 1, 2]))
    net.register_assembly("C.delete", "C", np.array([3, 4, 5]))
    net.controller = GateController(
        tape_gate_rules(("H1", "H2", "H3"), "SYM", "C.add", "C.delete", 2))
    net.remember_gates()

    def fire(events):
        clamp = {}
        if "C.add" in events:
            clamp["C"] = np.array([0, 1, 2])
        if "C.delete" in events:
            clamp["C"] = np.array([3, 4, 5])
        for h in ("H1", "H2", "H3"):
            if h in events:
                clamp[h] = np.array([7, 8, 9])
        net.step(clamp)
        return {h: net.areas[h].window for h in ("H1", "H2", "H3")}

    # add with top in H1 opens H1 (stays) and H3 (new top's area)
    assert fire({"C.add", "H1"}) == {"H1": 2, "H2": 0, "H3": 2}
    net.reset_to_rest()
    # add with top in H3 opens H3 and H2
    assert fire({"C.add", "H3"}) == {"H1": 0, "H2": 2, "H3": 2}
    net.reset_to_rest()
    # delete with top in H2 opens H3 (the successor cell's area)
    assert fire({"C.delete", "H2"}) == {"H1": 0, "H2": 0, "H3": 2}
    net.reset_to_rest()
    # delete with top in H3 opens H1
    assert fire({"C.delete", "H3"}) == {"H1": 2, "H2": 0, "H3": 0}
    net.reset_to_rest()
    # add on the empty half matches no rule: nothing opens
    assert fire({"C.add"}) == {"H1": 0, "H2": 0, "H3": 0}
