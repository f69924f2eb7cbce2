"""Acceptance suite: every shipped criterion at its stated scale and tolerance.

Each test prints one PASS line when its criterion holds; run with -s to
see them live. The large machine network is trained once per session
and shared by the criteria that evaluate it.
"""

import time
import warnings

import numpy as np
import pytest

import capsim.turing as turing
from capsim.core import k_cap, k_cap_oracle
from capsim.fsm import (divisible_by_3_fsm, reference_run, simulate_string,
                        train_fsm, transition_recall)
from capsim.graphgen import ModelParams, sample_stimuli
from capsim.harness import parse_config, rows_to_csv_bytes, run_experiment
from capsim.sequences import (MAIN_AREA, cued_recall, train_scaffold,
                              train_simple)
from capsim.streams import child_seed, stream_rng
from support import ALTERNATION_TABLE, alternation_net, symbolic_trace

SEED = 7
SEQ_PARAMS = ModelParams(n=1000, k=30, p=0.2, beta=0.1)
FSM_PARAMS = ModelParams(n=5000, k=70, p=0.4, beta=0.1)
TAPE_PARAMS = ModelParams(n=500, k=40, p=0.5, beta=1.0)


def ok(name, detail=""):
    print(f"PASS {name}" + (f"  [{detail}]" if detail else ""))


def seq_stimuli(seed, length=20, params=SEQ_PARAMS):
    return sample_stimuli(params.n, params.k, length, 0,
                          stream_rng(seed, "stimuli"))


def assert_unit_sums(net, context):
    for name, area in net.areas.items():
        if area.is_input:
            continue
        sums = net.incoming_weight_sums(name)
        positive = sums[sums > 0]
        assert np.all(np.abs(positive - 1.0) < 1e-9), f"{context}: area {name}"


@pytest.fixture(scope="module")
def sequence_runs():
    """Paired simple/scaffold trainings with recall probed after every round."""
    out = {"simple": [], "scaffold": [], "elapsed": 0.0}
    start = time.time()
    for trial in range(10):
        seed = child_seed(SEED, "paired", trial)
        stimuli = seq_stimuli(seed)
        for tag, train, scaffold in (("simple", train_simple, False),
                                     ("scaffold", train_scaffold, True)):
            curve = []

            def hook(net, trace, round_index):
                assert_unit_sums(net, f"{tag} trial {trial} round {round_index}")
                curve.append(cued_recall(net, stimuli, 1, trace.rounds[-1],
                                         scaffold=scaffold).last(MAIN_AREA))

            train(SEQ_PARAMS, stimuli, 10, seed, round_hook=hook)
            out[tag].append(curve)
    out["elapsed"] = time.time() - start
    return out


@pytest.fixture(scope="module")
def fsm_network():
    machine = divisible_by_3_fsm()
    start = time.time()

    def epoch_hook(fsmnet, epoch):
        # Full conservation check once per epoch at this scale; the other
        # suites check after every single round.
        assert_unit_sums(fsmnet.net, f"machine epoch {epoch}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fsmnet = train_fsm(machine, FSM_PARAMS, 15, child_seed(SEED, "fsm"),
                           epoch_hook=epoch_hook)
    return fsmnet, time.time() - start


def string_accuracy(fsmnet, count, length, rng):
    symbols = [s for s in fsmnet.fsm.alphabet if s != "#"]
    hits = 0
    for _ in range(count):
        s = "".join(rng.choice(symbols) for _ in range(length))
        expected, _ = reference_run(fsmnet.fsm, s)
        hits += simulate_string(fsmnet, s).accepted == expected
    return hits / count


class TestSequenceCriteria:
    def test_simple_sequence_copy(self, sequence_runs):
        finals = [curve[-1] for curve in sequence_runs["simple"]]
        mean = float(np.mean(finals))
        assert mean >= 0.9
        assert sequence_runs["elapsed"] <= 120.0
        ok("simple sequence copy",
           f"mean last recall {mean:.3f} in {sequence_runs['elapsed']:.0f}s")

    def test_scaffold_advantage(self, sequence_runs):
        simple3 = float(np.mean([c[2] for c in sequence_runs["simple"]]))
        scaffold3 = float(np.mean([c[2] for c in sequence_runs["scaffold"]]))
        simple10 = float(np.mean([c[-1] for c in sequence_runs["simple"]]))
        scaffold10 = float(np.mean([c[-1] for c in sequence_runs["scaffold"]]))
        assert scaffold3 > simple3
        assert simple10 >= 0.9 and scaffold10 >= 0.9
        ok("scaffold advantage",
           f"T=3 scaffold {scaffold3:.3f} > simple {simple3:.3f}; "
           f"T=10 {scaffold10:.3f}/{simple10:.3f}")

    def test_capacity_at_thirty(self):
        recalls, overlaps = [], []
        for trial in range(10):
            seed = child_seed(SEED, "capacity", trial)
            stimuli = seq_stimuli(seed, length=30)
            result = train_simple(SEQ_PARAMS, stimuli, 10, seed)
            report = result.recall(1)
            recalls.append(report.last(MAIN_AREA))
            overlaps.append(report.max_overlap)
        mean_recall = float(np.mean(recalls))
        worst_overlap = float(np.max(overlaps))
        assert mean_recall >= 0.8
        assert worst_overlap <= 0.5
        ok("capacity at length 30",
           f"mean recall {mean_recall:.3f}, max overlap {worst_overlap:.3f}")

    def test_parameter_sweep_endpoints(self):
        def mean_recall(params, seed_tag):
            values = []
            for trial in range(10):
                seed = child_seed(SEED, seed_tag, trial)
                stimuli = sample_stimuli(params.n, params.k, 25,
                                         0 if params.k * 25 <= params.n else params.k,
                                         stream_rng(seed, "stimuli"))
                result = train_simple(params, stimuli, 10, seed)
                values.append(result.recall(1).last(MAIN_AREA))
            return float(np.mean(values))

        small_n = mean_recall(ModelParams(n=100, k=10, p=0.2, beta=0.1), "n100")
        large_n = mean_recall(ModelParams(n=1500, k=39, p=0.2, beta=0.1), "n1500")
        low_p = mean_recall(ModelParams(n=1000, k=30, p=0.04, beta=0.1), "p004")
        high_p = mean_recall(ModelParams(n=1000, k=30, p=0.4, beta=0.1), "p04")
        assert large_n > small_n
        assert high_p > low_p
        ok("parameter sweep endpoints",
           f"recall n=1500 {large_n:.3f} > n=100 {small_n:.3f}; "
           f"p=0.4 {high_p:.3f} > p=0.04 {low_p:.3f}")


class TestMachineCriteria:
    def test_fsm_training(self, fsm_network):
        fsmnet, train_seconds = fsm_network
        start = time.time()
        sim = simulate_string(fsmnet, "30471")
        assert sim.accepted is True
        recalls = list(transition_recall(fsmnet).values())
        mean_recall = float(np.mean(recalls))
        assert mean_recall >= 0.9
        accuracy = string_accuracy(fsmnet, 50, 20, stream_rng(SEED, "acc-strings"))
        assert accuracy >= 0.95
        elapsed = train_seconds + time.time() - start
        assert elapsed <= 600.0
        ok("machine training",
           f"30471 accepted, mean transition recall {mean_recall:.3f}, "
           f"20-symbol accuracy {accuracy:.2f}, {elapsed:.0f}s")

    def test_fsm_string_length(self, fsm_network):
        fsmnet, _ = fsm_network
        long_accuracy = string_accuracy(fsmnet, 50, 100,
                                        stream_rng(SEED, "long-strings"))
        assert long_accuracy >= 0.9
        small = ModelParams(n=1000, k=32, p=0.4, beta=0.1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            small_net = train_fsm(divisible_by_3_fsm(), small, 15,
                                  child_seed(SEED, "fsm-small"))
        small_accuracy = string_accuracy(small_net, 50, 100,
                                         stream_rng(SEED, "small-strings"))
        assert small_accuracy > 0.2
        ok("machine string length",
           f"len-100 accuracy {long_accuracy:.2f} at n=5000, "
           f"{small_accuracy:.2f} at n=1000")


class TestExactCriteria:
    def test_alternation_tabled_exactly(self):
        net = alternation_net()
        stimuli = sample_stimuli(200, 10, 5, 0, stream_rng(1, "stimuli"))
        assert symbolic_trace(net, stimuli, 5) == ALTERNATION_TABLE
        ok("alternation firing table", "5 steps symbol-for-symbol")

    def test_k_cap_against_oracle(self):
        rng = stream_rng(SEED, "cap-ties")
        gen = np.random.default_rng(1001)
        failures = 0
        for trial in range(10_000):
            n = int(gen.integers(2, 60))
            k = int(gen.integers(1, n + 1))
            if trial % 2 == 0:
                values = gen.integers(0, 5, size=n).astype(float)
            else:
                values = gen.random(n)
            cap = k_cap(values, k, rng)
            if values.max() <= 0:
                failures += cap.size != 0
                continue
            above, closure = k_cap_oracle(values, k)
            tie_free = above.size == k
            if tie_free:
                failures += not np.array_equal(np.sort(above), cap)
            else:
                inside = np.all(np.isin(cap, np.union1d(above, closure)))
                failures += not (cap.size == k and inside
                                 and np.all(np.isin(above, cap)))
        assert failures == 0
        ok("k-cap oracle", "10000 vectors, 0 failures")

    def test_homeostasis_during_tape_script(self):
        # Sequence and machine suites assert conservation inside their own
        # hooks; this covers the tape suite's training rounds.
        half = turing.build_tape_half(TAPE_PARAMS, ("a", "b", "c"),
                                      seed=child_seed(SEED, "homeo-tape"))
        rng = stream_rng(SEED, "homeo-script")
        reference = []
        for _ in range(12):
            if reference and rng.random() < 0.4:
                turing.tape_delete(half)
                reference.pop(0)
            else:
                sym = ("a", "b", "c")[rng.integers(0, 3)]
                turing.tape_add(half, sym)
                reference.insert(0, sym)
            assert_unit_sums(half.net, "tape script")
        ok("homeostasis conservation", "sums within 1e-9 after every round")


class TestTapeAndMachineOracles:
    def test_tape_oracle_hundred_scripts(self):
        good = 0
        for script_id in range(100):
            rng = stream_rng(SEED, "script", script_id)
            half = turing.build_tape_half(
                TAPE_PARAMS, ("a", "b", "c"),
                seed=child_seed(SEED, "tape", script_id))
            reference = []
            intact = True
            for _ in range(20):
                if reference and rng.random() < 0.45:
                    turing.tape_delete(half)
                    reference.pop(0)
                else:
                    sym = ("a", "b", "c")[rng.integers(0, 3)]
                    turing.tape_add(half, sym)
                    reference.insert(0, sym)
                if reference and turing.read_top(half)[0] != reference[0]:
                    intact = False
                    break
            good += intact
        assert good >= 95
        ok("tape oracle", f"{good}/100 scripts fully correct")

    def test_tm_oracle_twenty_trials_each(self):
        cases = [(turing.immediate_accept_tm(), "immediate", ""),
                 (turing.unary_successor_tm(), "successor", "11111111")]
        for machine, name, input_string in cases:
            reference = turing.reference_tm_run(machine, input_string, 60)
            matches = 0
            for trial in range(20):
                tmnet = turing.train_tm(machine, TAPE_PARAMS, 3,
                                        child_seed(SEED, "tm", name, trial))
                run = turing.run_tm(tmnet, input_string, 60)
                matches += (run.outcome is reference.outcome
                            and run.left == reference.left
                            and run.right == reference.right)
            assert matches >= 18, f"{name}: {matches}/20"
            ok(f"machine-on-tape oracle ({name})", f"{matches}/20 trials match")


class TestDeterminism:
    SUITES = {
        "simple-seq": dict(trials=10, params=dict(n=1000, k=30, p=0.2, beta=0.1),
                           length=20, presentations=10),
        "scaffold-seq": dict(trials=10, params=dict(n=1000, k=30, p=0.2, beta=0.1),
                             length=20, presentations=10),
        "seq-capacity": dict(trials=10, params=dict(n=1000, k=30, p=0.2, beta=0.1),
                             grid=[30], presentations=10),
        "seq-sweep": dict(trials=10, vary="n", grid=[100, 1500],
                          params=dict(n=1000, k=30, p=0.2, beta=0.1),
                          length=25, presentations=10),
        "fsm-train": dict(trials=1, machine="even-zeros",
                          params=dict(n=1000, k=32, p=0.5, beta=0.1),
                          presentations=15, sample_size=20, string_length=20),
        "fsm-run": dict(trials=1, machine="div3",
                        params=dict(n=5000, k=70, p=0.4, beta=0.1),
                        presentations=15, string="30471"),
        "fsm-strlen": dict(trials=1, machine="even-zeros", vary="n",
                           grid=[1000], lengths=[20, 100], presentations=15,
                           sample_size=20,
                           params=dict(n=1000, k=32, p=0.5, beta=0.1)),
        "tm-run": dict(trials=20, machine="unary-successor", string="111",
                       presentations=3, max_steps=60,
                       params=dict(n=500, k=40, p=0.5, beta=1.0)),
    }

    @pytest.mark.parametrize("kind", sorted(SUITES))
    def test_byte_identical_rerun(self, kind):
        data = {"kind": kind, "seed": SEED}
        data.update(self.SUITES[kind])
        cfg = parse_config(data)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            first = rows_to_csv_bytes(run_experiment(cfg))
            second = rows_to_csv_bytes(run_experiment(cfg))
        assert first == second
        ok(f"determinism ({kind})", f"{len(first)} CSV bytes identical")
