from pathlib import Path

import pytest

from capsim.harness import (CSV_HEADER, AggregateRow, ConfigError, ResultRow,
                            aggregate, load_config, parse_config,
                            rows_to_csv_bytes, run_experiment, run_trial,
                            write_csv)

MICRO_PARAMS = {"n": 200, "k": 12, "p": 0.3, "beta": 0.2}


def micro_config(kind, **extra):
    data = {"kind": kind, "trials": 2, "seed": 5,
            "params": dict(MICRO_PARAMS)}
    data.update(extra)
    return parse_config(data, base_dir=Path("configs"))


CONFIGS = {
    "simple-seq": dict(length=5, presentations=3),
    "scaffold-seq": dict(length=5, presentations=3),
    "seq-capacity": dict(grid=[3, 5], presentations=3),
    "seq-sweep": dict(vary="p", grid=[0.2, 0.4], length=5, presentations=3),
    "fsm-train": dict(machine="even-zeros", presentations=3, sample_size=4,
                      string_length=5),
    "fsm-run": dict(machine="even-zeros", presentations=3, string="01"),
    "fsm-sweep": dict(machine="even-zeros", vary="p", grid=[0.3, 0.5],
                      presentations=3, sample_size=3, string_length=4),
    "fsm-strlen": dict(machine="even-zeros", vary="p", grid=[0.4], lengths=[3, 6],
                       presentations=3, sample_size=3),
    "tm-run": dict(machine="immediate-accept", string="", presentations=2,
                   max_steps=5, params={"n": 250, "k": 18, "p": 0.4, "beta": 1.0}),
}


class TestConfigValidation:
    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="unknown field"):
            parse_config({"kind": "simple-seq", "bogus": 1})

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="config.kind"):
            parse_config({"kind": "nope"})

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="config.length"):
            parse_config({"kind": "simple-seq", "params": MICRO_PARAMS,
                          "presentations": 3})

    def test_bad_trials(self):
        with pytest.raises(ConfigError, match="config.trials"):
            parse_config({"kind": "simple-seq", "trials": 0,
                          "params": MICRO_PARAMS, "length": 3,
                          "presentations": 1})

    def test_bad_params(self):
        with pytest.raises(ConfigError, match="config.params"):
            parse_config({"kind": "simple-seq", "params": {"n": 10, "k": 30,
                          "p": 0.2, "beta": 0.1}, "length": 3,
                          "presentations": 1})

    def test_empty_grid(self):
        with pytest.raises(ConfigError, match="config.grid"):
            micro_config("seq-capacity", grid=[], presentations=2)

    def test_sqrt_k(self):
        cfg = parse_config({"kind": "simple-seq", "params": {"n": 400,
                            "k": "sqrt", "p": 0.3, "beta": 0.1},
                            "length": 3, "presentations": 1})
        assert cfg.params.k == 20

    def test_checked_in_configs_parse(self):
        for path in Path("configs").glob("*.json"):
            cfg = load_config(path)
            assert cfg.trials >= 1


@pytest.mark.parametrize("kind", sorted(CONFIGS))
def test_kind_runs_and_is_reproducible(kind):
    cfg = micro_config(kind, **CONFIGS[kind])
    rows_a = run_experiment(cfg)
    rows_b = run_experiment(cfg)
    assert rows_a == rows_b
    assert len(rows_a) > 0
    assert all(isinstance(r.metric_value, float) for r in rows_a)
    assert rows_to_csv_bytes(rows_a) == rows_to_csv_bytes(rows_b)


def test_trial_order_independence():
    cfg = micro_config("simple-seq", **CONFIGS["simple-seq"])
    forward = run_experiment(cfg)
    backward = [row for i in reversed(range(cfg.trials)) for row in run_trial(cfg, i)]
    assert sorted(map(repr, forward)) == sorted(map(repr, backward))


def test_adding_trials_preserves_existing_rows():
    cfg2 = micro_config("simple-seq", **CONFIGS["simple-seq"])
    cfg3 = micro_config("simple-seq", trials=3, **CONFIGS["simple-seq"])
    rows2 = run_experiment(cfg2)
    rows3 = run_experiment(cfg3)
    assert rows3[: len(rows2)] == rows2


def test_csv_schema_and_bytes(tmp_path):
    cfg = micro_config("simple-seq", **CONFIGS["simple-seq"])
    rows = run_experiment(cfg)
    path = tmp_path / "out.csv"
    write_csv(rows, path)
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert path.read_bytes() == rows_to_csv_bytes(rows)


def test_worker_pool_matches_sequential():
    cfg = micro_config("simple-seq", **CONFIGS["simple-seq"])
    assert run_experiment(cfg, workers=2) == run_experiment(cfg)


class TestAggregate:
    def test_single_row(self):
        row = ResultRow("e", "p", 1, 0, "m", 0.25)
        agg = aggregate([row])
        assert agg == [AggregateRow("e", "p", 1, "m", 0.25, 0.25, 0.25)]

    def test_zero_one_values(self):
        rows = [ResultRow("e", "p", 1, t, "m", float(t)) for t in range(2)]
        agg = aggregate(rows)[0]
        assert (agg.mean, agg.low, agg.high) == (0.5, 0.0, 1.0)

    def test_groups_recomputed_from_rows(self):
        cfg = micro_config("simple-seq", **CONFIGS["simple-seq"])
        rows = run_experiment(cfg)
        for agg in aggregate(rows):
            values = [r.metric_value for r in rows
                      if (r.experiment, r.param, r.value, r.metric)
                      == (agg.experiment, agg.param, agg.value, agg.metric)]
            assert agg.low == min(values) and agg.high == max(values)
            assert agg.mean == pytest.approx(sum(values) / len(values))

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            aggregate([])
