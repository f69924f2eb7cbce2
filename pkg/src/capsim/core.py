"""Brain-area network: k-winner dynamics, Hebbian plasticity, homeostasis, gating.

A Network owns named areas and directed fibers. Steps are synchronous:
each neuron's input is the summed weight of incoming synapses from
neurons that fired on the previous step; every disinhibited, unclamped
area then fires the k neurons of largest input (ties at the cap
threshold broken uniformly at random from a per-area stream) while
clamped areas fire exactly their clamped set. In training mode every
synapse whose source fired at t and whose target fires at t+1 is scaled
by (1 + beta), at most once per step. ``homeostasis`` renormalizes each
non-input neuron's incoming weights, jointly across its recurrent and
all fiber synapses, to sum to 1; protocols call it once per
presentation round.

Rest convention: an area whose maximal input is exactly zero fires
nothing. Protocols start from rest, and an all-tie cap out of silence
would pollute assemblies with spurious random caps.
"""

from __future__ import annotations

import enum
import json

import numpy as np

from .gates import GateController, GateRule
from .graphgen import gen_fiber, gen_recurrent, ModelParams
from .streams import stream_rng

SNAPSHOT_VERSION = 1

_EMPTY = np.empty(0, dtype=np.int64)
_EMPTY.flags.writeable = False


class ProtocolError(RuntimeError):
    """A protocol-level precondition was violated (bug in the caller)."""


class Mode(enum.Enum):
    TRAINING = "training"
    EVALUATION = "evaluation"


def k_cap(values: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of the k largest entries, ties at the threshold broken uniformly.

    Returns the empty set when the maximum input is zero (area at rest).
    """
    n = values.size
    if n == 0 or k <= 0 or values.max() <= 0.0:
        return _EMPTY
    if k >= n:
        return np.arange(n, dtype=np.int64)
    threshold = np.partition(values, n - k)[n - k]
    above = np.flatnonzero(values > threshold)
    need = k - above.size
    ties = np.flatnonzero(values == threshold)
    if need == ties.size:
        chosen = ties
    else:
        chosen = rng.choice(ties, size=need, replace=False)
    return np.sort(np.concatenate([above, chosen])).astype(np.int64)


def k_cap_oracle(values: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Sort-based reference: (indices strictly above threshold, full tie closure).

    The tie closure is every index whose value equals the k-th largest;
    any valid cap is `above` plus exactly k - len(above) members of it.
    """
    order = np.argsort(-values, kind="stable")
    threshold = values[order[k - 1]]
    above = np.flatnonzero(values > threshold)
    closure = np.flatnonzero(values == threshold)
    return above, closure


class Area:
    """One brain area: optional recurrent weights, firing set, gate state."""

    def __init__(self, name, n, k, *, weights=None, is_input=False, tie_rng=None):
        self.name = name
        self.n = n
        self.k = k
        self.weights = weights  # (n, n) float64, None for input areas
        self.is_input = is_input
        self.firing = _EMPTY
        self.inhibited = not is_input  # base gate flag; timed windows override
        self.window = 0  # remaining steps of timed disinhibition
        self.tie_rng = tie_rng
        self._normalized = False  # first homeostasis call rescales every neuron

    @property
    def gate_open(self) -> bool:
        return self.window > 0 or not self.inhibited


class Fiber:
    """Directed bundle of synapses between two areas."""

    def __init__(self, src, dst, weights, plastic=True):
        self.src = src
        self.dst = dst
        self.weights = weights  # (n_src, n_dst) float64
        self.plastic = plastic


class Network:
    """Single-owner mutable network; construction order fixes all RNG streams."""

    def __init__(self, seed: int, beta: float, mode: Mode = Mode.TRAINING):
        self.seed = seed
        self.beta = beta
        self.mode = mode
        self.t = 0
        self.areas: dict[str, Area] = {}
        self.fibers: dict[tuple[str, str], Fiber] = {}
        self.assemblies: dict[str, tuple[str, np.ndarray]] = {}
        self.controller: GateController | None = None
        self._into: dict[str, list[Fiber]] = {}
        self._dirty: dict[str, np.ndarray] = {}
        self._initial_gates: dict[str, tuple[bool, int]] = {}

    # -- construction -------------------------------------------------

    def add_area(self, name: str, n: int, k: int, p: float, *,
                 recurrent: bool = True) -> Area:
        """Add a brain area with freshly generated recurrent connectivity.

        ``recurrent=False`` makes a readout register: it fires k-caps from
        its fiber input but holds no synapses of its own, so clamping it
        for consecutive rounds cannot build a self-attractor.
        """
        self._check_new_name(name)
        params = ModelParams(n=n, k=k, p=p, beta=self.beta)
        weights = None
        if recurrent:
            weights = gen_recurrent(params, stream_rng(self.seed, "area", name))
        area = Area(name, n, k, weights=weights,
                    tie_rng=stream_rng(self.seed, "ties", name))
        self._install(area)
        return area

    def add_input_area(self, name: str, n: int, k: int = 0) -> Area:
        """Add a sensory area: no recurrent synapses, fires only when clamped."""
        self._check_new_name(name)
        area = Area(name, n, k, is_input=True)
        self._install(area)
        return area

    def add_fiber(self, src: str, dst: str, p: float) -> Fiber:
        """Add a directed fiber src -> dst with Bernoulli(p) unit weights."""
        if (src, dst) in self.fibers:
            raise ValueError(f"fiber {src}->{dst} already exists")
        src_area, dst_area = self.areas[src], self.areas[dst]
        if dst_area.is_input:
            raise ValueError(f"input area {dst!r} cannot receive a fiber")
        weights = gen_fiber(src_area.n, dst_area.n, p,
                            stream_rng(self.seed, "fiber", src, dst))
        fiber = Fiber(src, dst, weights)
        self.fibers[(src, dst)] = fiber
        self._into[dst].append(fiber)
        return fiber

    def register_assembly(self, name: str, area: str, neurons: np.ndarray) -> None:
        """Name a fixed neuron set so gate rules and decoders can watch it fire."""
        if name in self.assemblies:
            raise ValueError(f"assembly {name!r} already registered")
        arr = np.sort(np.asarray(neurons, dtype=np.int64))
        if arr.size and (arr[0] < 0 or arr[-1] >= self.areas[area].n):
            raise ValueError(f"assembly {name!r} has out-of-range neuron ids")
        arr.flags.writeable = False
        self.assemblies[name] = (area, arr)

    def remember_gates(self) -> None:
        """Record the current gate flags as the protocol-initial configuration."""
        self._initial_gates = {
            name: (a.inhibited, a.window) for name, a in self.areas.items()
        }

    def _check_new_name(self, name):
        if name in self.areas:
            raise ValueError(f"area {name!r} already exists")

    def _install(self, area):
        self.areas[area.name] = area
        self._into[area.name] = []
        self._dirty[area.name] = np.zeros(area.n, dtype=bool)
        self._initial_gates[area.name] = (area.inhibited, area.window)

    # -- dynamics -----------------------------------------------------

    def total_input(self, name: str) -> np.ndarray:
        """Summed synaptic input to every neuron of ``name`` from current firing."""
        firing = {a: area.firing for a, area in self.areas.items()}
        return self._input_from(firing, name)

    def _input_from(self, firing, name):
        area = self.areas[name]
        total = np.zeros(area.n, dtype=np.float64)
        rec = firing[name]
        if area.weights is not None and rec.size:
            total += area.weights[rec].sum(axis=0)
        for fiber in self._into[name]:
            pre = firing[fiber.src]
            if pre.size:
                total += fiber.weights[pre].sum(axis=0)
        return total

    def step(self, clamps: dict[str, np.ndarray | None] | None = None) -> dict[str, np.ndarray]:
        """Advance one synchronous step and return the new firing sets.

        ``clamps`` maps area name to a neuron set that fires regardless of
        input and gating (None forces silence). Unclamped input areas stay
        silent; unclamped inhibited areas fire nothing; everything else
        fires the k-cap of its input. Plasticity applies in training mode;
        gate rules fire on this step's events and shape the next step.
        """
        clamped = self._normalize_clamps(clamps)
        prev = {name: area.firing for name, area in self.areas.items()}
        new = {}
        for name, area in self.areas.items():
            if name in clamped:
                new[name] = clamped[name]
            elif area.is_input or not area.gate_open:
                new[name] = _EMPTY
            else:
                new[name] = k_cap(self._input_from(prev, name), area.k, area.tie_rng)

        if self.mode is Mode.TRAINING:
            self._hebbian(prev, new)

        for name, area in self.areas.items():
            area.firing = new[name]
        self.t += 1

        # Windows decrement before rule actions, so a rule firing at step t
        # opens its target for exactly steps t+1 .. t+duration.
        for area in self.areas.values():
            if area.window > 0:
                area.window -= 1
        if self.controller is not None:
            self.controller.apply(self, self._events(new))
        return new

    def _normalize_clamps(self, clamps):
        if not clamps:
            return {}
        out = {}
        for name, neurons in clamps.items():
            if name not in self.areas:
                raise ProtocolError(f"clamp references unknown area {name!r}")
            if neurons is None:
                out[name] = _EMPTY
                continue
            arr = np.sort(np.asarray(neurons, dtype=np.int64))
            if arr.size and (arr[0] < 0 or arr[-1] >= self.areas[name].n):
                raise ProtocolError(f"clamp for {name!r} has out-of-range ids")
            out[name] = arr
        return out

    def _hebbian(self, prev, new):
        gain = 1.0 + self.beta
        if gain == 1.0:
            return
        for name, area in self.areas.items():
            post = new[name]
            if post.size == 0 or area.is_input:
                continue
            touched = False
            rec = prev[name]
            if area.weights is not None and rec.size:
                area.weights[np.ix_(rec, post)] *= gain
                touched = True
            for fiber in self._into[name]:
                pre = prev[fiber.src]
                if fiber.plastic and pre.size:
                    fiber.weights[np.ix_(pre, post)] *= gain
                    touched = True
            if touched:
                self._dirty[name][post] = True

    def _events(self, new) -> set[str]:
        fired = {name for name, f in new.items() if f.size}
        for label, (area, neurons) in self.assemblies.items():
            f = new[area]
            if f.size and neurons.size:
                hits = np.intersect1d(f, neurons, assume_unique=True).size
                if 2 * hits >= neurons.size:
                    fired.add(label)
        return fired

    def homeostasis(self) -> None:
        """Rescale incoming weights so every non-input neuron's sum is 1.

        Protocol builders call this once at construction and once per
        presentation round, so the sum-to-one invariant holds at every
        round boundary. Neurons whose weights did not change since the
        previous call are already normalized and are skipped; the first
        call rescales all. Neurons with zero incoming weight are left
        untouched.
        """
        if self.mode is not Mode.TRAINING:
            raise ProtocolError("homeostasis requires training mode")
        for name, area in self.areas.items():
            if area.is_input:
                continue
            mats = ([] if area.weights is None else [area.weights])
            mats += [f.weights for f in self._into[name]]
            if not mats:
                continue
            if not area._normalized:
                total = np.zeros(area.n)
                for w in mats:
                    total += w.sum(axis=0)
                scale = np.divide(1.0, total, out=np.ones_like(total), where=total > 0)
                for w in mats:
                    w *= scale
                area._normalized = True
            else:
                cols = np.flatnonzero(self._dirty[name])
                if cols.size == 0:
                    continue
                total = np.zeros(cols.size)
                for w in mats:
                    total += w[:, cols].sum(axis=0)
                scale = np.divide(1.0, total, out=np.ones_like(total), where=total > 0)
                for w in mats:
                    w[:, cols] *= scale
            self._dirty[name][:] = False

    def incoming_weight_sums(self, name: str) -> np.ndarray:
        """Per-neuron total incoming weight (recurrent plus all fibers)."""
        area = self.areas[name]
        total = np.zeros(area.n)
        if area.weights is not None:
            total += area.weights.sum(axis=0)
        for fiber in self._into[name]:
            total += fiber.weights.sum(axis=0)
        return total

    def reset_to_rest(self) -> None:
        """Silence all areas and restore the protocol-initial gate flags."""
        for name, area in self.areas.items():
            area.firing = _EMPTY
            area.inhibited, area.window = self._initial_gates[name]

    # -- snapshots ----------------------------------------------------

    def save(self, path) -> None:
        """Serialize the full network state (weights, firing, gates, RNG) to .npz."""
        meta = {
            "version": SNAPSHOT_VERSION,
            "seed": self.seed,
            "beta": self.beta,
            "mode": self.mode.value,
            "t": self.t,
            "areas": [
                {
                    "name": a.name,
                    "n": a.n,
                    "k": a.k,
                    "is_input": a.is_input,
                    "inhibited": a.inhibited,
                    "window": a.window,
                    "normalized": a._normalized,
                    "tie_state": None if a.tie_rng is None
                    else json.dumps(a.tie_rng.bit_generator.state),
                }
                for a in self.areas.values()
            ],
            "fibers": [[src, dst, fiber.plastic]
                       for (src, dst), fiber in self.fibers.items()],
            "assemblies": {name: area for name, (area, _) in self.assemblies.items()},
            "initial_gates": {k: list(v) for k, v in self._initial_gates.items()},
            "rules": None if self.controller is None
            else [rule.to_dict() for rule in self.controller.rules],
        }
        arrays = {"meta": np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)}
        for name, area in self.areas.items():
            arrays[f"firing::{name}"] = area.firing
            arrays[f"dirty::{name}"] = self._dirty[name]
            if area.weights is not None:
                arrays[f"area::{name}"] = area.weights
        for (src, dst), fiber in self.fibers.items():
            arrays[f"fiber::{src}::{dst}"] = fiber.weights
        for name, (_, neurons) in self.assemblies.items():
            arrays[f"assembly::{name}"] = neurons
        np.savez_compressed(path, **arrays)

    @classmethod
    def load(cls, path) -> "Network":
        data = np.load(path)
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta["version"] != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {meta['version']}")
        net = cls(meta["seed"], meta["beta"], Mode(meta["mode"]))
        net.t = meta["t"]
        for record in meta["areas"]:
            name = record["name"]
            tie_rng = None
            if record["tie_state"] is not None:
                tie_rng = np.random.default_rng(0)
                tie_rng.bit_generator.state = json.loads(record["tie_state"])
            weights = None
            if f"area::{name}" in data:
                weights = data[f"area::{name}"]
            area = Area(name, record["n"], record["k"], weights=weights,
                        is_input=record["is_input"], tie_rng=tie_rng)
            area.inhibited = record["inhibited"]
            area.window = record["window"]
            area._normalized = record["normalized"]
            area.firing = data[f"firing::{name}"].astype(np.int64)
            net._install(area)
            net._dirty[name] = data[f"dirty::{name}"].astype(bool)
        for src, dst, plastic in meta["fibers"]:
            fiber = Fiber(src, dst, data[f"fiber::{src}::{dst}"], plastic=plastic)
            net.fibers[(src, dst)] = fiber
            net._into[dst].append(fiber)
        for name, area in meta["assemblies"].items():
            net.register_assembly(name, area, data[f"assembly::{name}"])
        net._initial_gates = {k: (v[0], v[1]) for k, v in meta["initial_gates"].items()}
        if meta["rules"] is not None:
            net.controller = GateController(
                [GateRule.from_dict(d) for d in meta["rules"]])
        return net
