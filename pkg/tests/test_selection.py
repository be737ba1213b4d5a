"""Splitting, protocols, and grid orchestration."""

import numpy as np
import pytest

from harood.data import SyntheticShiftSpec, make_synthetic_suite
from harood.errors import ConfigError, EvalError
from harood.evaluation import (
    Combo,
    RunRecord,
    SelectionProtocol,
    default_grid,
    run_grid,
    select_by_oracle,
    select_by_validation,
    split_train_valid,
)
from harood.scenarios import bundle_from_domains


def test_protocol_validation():
    with pytest.raises(ConfigError):
        SelectionProtocol(kind="leave_one_domain_out")
    with pytest.raises(ConfigError):
        SelectionProtocol(validation_fraction=0.0)


def _domains(n_per_class=50, classes=2, domains=2, length=16):
    spec = SyntheticShiftSpec(domain_count=domains, class_count=classes, channels=1,
                              length=length, noise_std=0.01,
                              samples_per_class_per_domain=n_per_class, seed=3)
    return make_synthetic_suite(spec)


def test_split_80_20():
    domains = _domains(n_per_class=50, classes=1, domains=1)
    train, valid = split_train_valid(domains, 0.2, seed=0)
    assert len(train[0]) == 40
    assert len(valid) == 10


def test_split_deterministic_and_disjoint():
    domains = _domains()
    t1, v1 = split_train_valid(domains, 0.2, seed=5)
    t2, v2 = split_train_valid(domains, 0.2, seed=5)
    assert v1.x.tobytes() == v2.x.tobytes()
    for a, b in zip(t1, t2):
        assert a.stack()[0].tobytes() == b.stack()[0].tobytes()
    total = sum(len(d) for d in t1) + len(v1)
    assert total == sum(len(d) for d in domains)


def test_split_stratified_by_domain_class():
    domains = _domains(n_per_class=10, classes=2, domains=2)
    train, valid = split_train_valid(domains, 0.2, seed=1)
    for dom in train:
        _, y = dom.stack()
        counts = np.bincount(y, minlength=2)
        assert tuple(counts) == (8, 8)


def test_singleton_class_stays_in_train():
    from harood.data.types import DomainDataset, SensorWindow

    windows = [SensorWindow(values=np.zeros((1, 1, 4)), label=0, domain_id=0)
               for _ in range(10)]
    windows.append(SensorWindow(values=np.zeros((1, 1, 4)), label=1, domain_id=0))
    dom = DomainDataset(windows=windows, domain_id=0, class_count=2)
    train, valid = split_train_valid([dom], 0.2, seed=0)
    _, y_train = train[0].stack()
    assert 1 in y_train
    assert 1 not in valid.y


def _record(task, combo, seed, val, target, oracle=None, lr=0.01, bs=32):
    return RunRecord(task=task, algorithm="erm", combo=combo,
                     combo_params={"lr": lr, "batch_size": bs}, seed=seed,
                     backbone="cnn", final_val_acc=val, final_target_acc=target,
                     oracle_target_acc=oracle if oracle is not None else target)


def test_select_by_validation_picks_dominant_combo():
    records = [
        _record("t0", "a", 0, val=0.9, target=0.7),
        _record("t0", "b", 0, val=0.5, target=0.95),
    ]
    out = select_by_validation(records)["t0"]
    assert out.combo_id == "a"
    assert out.accuracy == 0.7


def test_select_by_validation_tie_breaks_to_lower_lr_then_batch():
    records = [
        _record("t0", "hi_lr", 0, val=0.8, target=0.6, lr=0.1, bs=32),
        _record("t0", "lo_lr_big_bs", 0, val=0.8, target=0.5, lr=0.01, bs=64),
        _record("t0", "lo_lr_small_bs", 0, val=0.8, target=0.4, lr=0.01, bs=32),
    ]
    out = select_by_validation(records)["t0"]
    assert out.combo_id == "lo_lr_small_bs"


def test_select_reported_is_mean_over_trials():
    records = [
        _record("t0", "a", 0, val=0.9, target=0.6),
        _record("t0", "a", 1, val=0.9, target=0.8),
        _record("t0", "a", 2, val=0.9, target=0.7),
    ]
    out = select_by_validation(records)["t0"]
    assert abs(out.accuracy - 0.7) < 1e-12


def test_oracle_dominates_validation_on_random_records():
    rng = np.random.default_rng(0)
    for trial_set in range(10):
        records = []
        for combo in ("a", "b", "c"):
            for seed in range(3):
                val = rng.uniform(0, 1)
                target = rng.uniform(0, 1)
                oracle = max(target, rng.uniform(0, 1))
                records.append(_record("t0", combo, seed, val, target, oracle))
        v = select_by_validation(records)["t0"].accuracy
        o = select_by_oracle(records)["t0"].accuracy
        assert o >= v - 1e-12


def test_oracle_single_record():
    rec = _record("t0", "a", 0, val=0.5, target=0.6, oracle=0.9)
    out = select_by_oracle([rec])["t0"]
    assert out.accuracy == 0.9


def test_selection_empty_records():
    with pytest.raises(EvalError):
        select_by_validation([])


def test_default_grid_is_twenty_lr_batch_combos():
    grid = default_grid()
    assert len(grid) == 20
    assert {c.lr for c in grid} == {0.001, 0.005, 0.01, 0.05, 0.1}
    assert {c.batch_size for c in grid} == {32, 64, 128, 256}


@pytest.fixture(scope="module")
def tiny_bundle():
    return bundle_from_domains(_domains(n_per_class=8, classes=2, domains=2), 2)


def test_run_grid_record_count(tiny_bundle):
    grid = [Combo(lr=0.01, batch_size=4), Combo(lr=0.05, batch_size=4)]
    records = run_grid(tiny_bundle, "erm", grid=grid, trials=2, max_epoch=1)
    assert len(records) == len(grid) * 2 * tiny_bundle.domain_count


def test_run_grid_resume_skips_existing(tiny_bundle):
    grid = [Combo(lr=0.01, batch_size=4)]
    first = run_grid(tiny_bundle, "erm", grid=grid, trials=1, max_epoch=1)
    from harood.evaluation import record_key

    existing = {record_key(r.task, r.algorithm, r.combo, r.seed): r for r in first}
    computed = []
    again = run_grid(tiny_bundle, "erm", grid=grid, trials=1, max_epoch=1,
                     existing=existing, on_record=lambda k, r: computed.append(k))
    assert computed == []
    assert [r.task for r in again] == [r.task for r in first]


def test_run_grid_trials_validation(tiny_bundle):
    with pytest.raises(ConfigError):
        run_grid(tiny_bundle, "erm", grid=[Combo(lr=0.01, batch_size=4)], trials=0,
                 max_epoch=1)
