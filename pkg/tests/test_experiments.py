import csv
import io
import math
import os

import pytest

from cofrelay.channel import ChannelVariances
from cofrelay.errors import ConfigError
from cofrelay.experiments import (CSV_HEADER, SweepConfig, TrialRecord, aggregate,
                                  compare_exhaustive, format_compare_csv, format_csv,
                                  nonconverged_fraction, results_document, run_sweep, run_trials,
                                  write_traces)

DEAD = ChannelVariances(*([-math.inf] * 5))
SMALL = dict(snr_min=10.0, snr_max=20.0, snr_step=10.0, trials=2, multistarts=1)


@pytest.mark.parametrize("field, kwargs", [
    ("snr_min", dict(snr_min=10.0, snr_max=5.0)),
    ("snr_step", dict(snr_step=0.0)),
    ("trials", dict(trials=0)),
    ("seed", dict(seed=-1)),
    ("strategies", dict(strategies=())),
    ("strategies", dict(strategies=("AF", "XF"))),
    ("strategies", dict(strategies=("AF", "AF"))),
    ("channel_mode", dict(channel_mode="frozen")),
    ("multistarts", dict(multistarts=0)),
    ("workers", dict(workers=0)),
    ("p_dbw", dict(p_dbw=math.nan)),
])
def test_config_errors_name_the_field(field, kwargs):
    with pytest.raises(ConfigError) as info:
        SweepConfig(**kwargs)
    assert info.value.field == field


def test_snr_grid():
    assert SweepConfig().snr_grid() == [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
    assert SweepConfig(snr_min=1.0, snr_max=2.0, snr_step=0.3).snr_grid() == [1.0, 1.3, 1.6, 1.9]


def test_trial_seeds_by_channel_mode():
    per_point = SweepConfig()
    held = SweepConfig(channel_mode="held-fixed")
    assert per_point.trial_seed(0, 3) != per_point.trial_seed(1, 3)
    assert held.trial_seed(0, 3) == held.trial_seed(1, 3)


def test_dead_channels_give_zero_rates():
    rows = run_sweep(SweepConfig(variances=DEAD, trials=1, snr_min=0, snr_max=10, snr_step=10))
    assert len(rows) == 2 * 5
    assert all(r.mean_rate == 0.0 and r.stderr == 0.0 for r in rows)


def test_csv_schema_and_order():
    rows = run_sweep(SweepConfig(**SMALL))
    text = format_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_HEADER
    keys = [(float(r[0]), r[1]) for r in parsed[1:]]
    assert keys == sorted(keys)
    assert len(keys) == 2 * 5


def test_sweep_is_deterministic():
    config = SweepConfig(**SMALL, seed=5)
    assert format_csv(run_sweep(config)) == format_csv(run_sweep(config))


def test_worker_pool_matches_serial():
    config = SweepConfig(**SMALL, strategies=("AF", "CoF"))
    parallel = SweepConfig(**SMALL, strategies=("AF", "CoF"), workers=2)
    assert format_csv(run_sweep(config)) == format_csv(run_sweep(parallel))


def test_held_fixed_rates_grow_with_snr():
    config = SweepConfig(snr_min=0, snr_max=30, snr_step=10, trials=3, multistarts=2,
                         channel_mode="held-fixed", strategies=("AF", "DF", "CF", "CoF"))
    rows = run_sweep(config)
    for strategy in config.strategies:
        means = [r.mean_rate for r in rows if r.strategy == strategy]
        assert all(b >= a - 1e-6 for a, b in zip(means, means[1:]))


def test_aggregate_statistics():
    recs = [TrialRecord(0.0, i, 0, (0,) * 5, "AF", rate) for i, rate in enumerate([1.0, 2.0, 4.0])]
    (row,) = aggregate(SweepConfig(), recs)
    assert row.mean_rate == pytest.approx(7 / 3)
    assert row.stderr == pytest.approx(math.sqrt(((1 - 7 / 3) ** 2 + (2 - 7 / 3) ** 2
                                                  + (4 - 7 / 3) ** 2) / 2 / 3))
    assert row.trials == 3


def test_nonconverged_fraction_counts_trials():
    recs = [TrialRecord(0.0, 0, 0, (0,) * 5, "CoF", 1.0, converged=False),
            TrialRecord(0.0, 0, 0, (0,) * 5, "CoD", 1.0),
            TrialRecord(0.0, 1, 0, (0,) * 5, "CoF", 1.0)]
    assert nonconverged_fraction(recs) == 0.5


def test_results_document_and_traces(tmp_path):
    config = SweepConfig(**{**SMALL, "trials": 1}, strategies=("CoF", "CoD"))
    records = run_trials(config, keep_traces=True)
    doc = results_document(config, aggregate(config, records), records)
    assert doc["environment"]["seed"] == 0
    assert len(doc["trials"]) == 4
    assert all(t["k"] is not None and t["beta"] is not None for t in doc["trials"])
    write_traces(str(tmp_path), records)
    files = sorted(os.listdir(tmp_path))
    assert files
    with open(tmp_path / files[0]) as fh:
        assert fh.readline().strip() == "iteration,objective,step_norm"


def test_compare_exhaustive_single_trial():
    config = SweepConfig(variances=ChannelVariances(20, 20, 0, 0, 20), snr_min=15, snr_max=15,
                         trials=1, strategies=("CoF",))
    (row,) = compare_exhaustive(config)
    assert abs(row.rate_algorithm - row.rate_exhaustive) <= 1e-3
    assert row.iterations_to_match is not None
    assert format_compare_csv([row]).startswith("snr_db,trial,rate_algorithm")


def test_compare_exhaustive_needs_cof():
    with pytest.raises(ConfigError):
        compare_exhaustive(SweepConfig(strategies=("AF",)))
