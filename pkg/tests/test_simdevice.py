import math

import numpy as np
import pytest

from disorder.simdevice import (
    ConditionProfile,
    EndOfStream,
    SimDevice,
    SimScript,
    parse_device,
)


def script_with(profile, n=100, **kwargs):
    return SimScript(profiles={"only": profile}, timeline=[("only", n)], **kwargs)


def test_degenerate_profile_is_constant_zero():
    dev = SimDevice(script_with(ConditionProfile(0.0, 0.0), 50))
    assert all(dev.next_observation() == 0.0 for _ in range(50))


def test_zero_inflation_mass():
    profile = ConditionProfile(12.4, 5.1, zero_inflation=0.9)
    dev = SimDevice(script_with(profile, 2000), seed=1)
    draws = np.array([dev.next_observation() for _ in range(2000)])
    assert np.mean(draws == 0.0) >= 0.88


def test_sample_mean_converges():
    profile = ConditionProfile(5859.1, 1469.9)
    dev = SimDevice(script_with(profile, 1000), seed=2)
    draws = np.array([dev.next_observation() for _ in range(1000)])
    assert abs(draws.mean() - 5859.1) <= 3 * 1469.9 / math.sqrt(1000)


def test_moments_at_ten_thousand():
    profile = ConditionProfile(100.0, 15.0)
    dev = SimDevice(script_with(profile, 10_000), seed=3)
    draws = np.array([dev.next_observation() for _ in range(10_000)])
    assert abs(draws.mean() - 100.0) <= 3 * 15.0 / 100.0
    assert abs(draws.std() - 15.0) <= 1.0


def test_same_seed_same_stream():
    script = script_with(ConditionProfile(40.0, 9.0), 200, seed=77)
    a = [SimDevice(script).next_observation() for _ in range(200)]
    script2 = SimScript.from_json(script.to_json())
    b = [SimDevice(script2).next_observation() for _ in range(200)]
    assert a == b


def test_integer_rounding_and_floor():
    profile = ConditionProfile(0.4, 0.0)
    dev = SimDevice(script_with(profile, 5))
    assert dev.next_observation() == 0.0
    raw = SimDevice(script_with(profile, 5), integer=False)
    assert raw.next_observation() == pytest.approx(0.4)


def test_negative_draws_clamped():
    profile = ConditionProfile(0.0, 5.0)
    dev = SimDevice(script_with(profile, 500), seed=4)
    assert min(dev.next_observation() for _ in range(500)) == 0.0


def test_exhaustion_and_cyclic_mode():
    script = script_with(ConditionProfile(1.0, 0.0), 3)
    dev = SimDevice(script)
    for _ in range(3):
        dev.next_observation()
    with pytest.raises(EndOfStream):
        dev.next_observation()

    cyclic = script_with(ConditionProfile(1.0, 0.0), 3, cyclic=True)
    dev = SimDevice(cyclic)
    assert len([dev.next_observation() for _ in range(10)]) == 10


def test_iterator_protocol():
    dev = SimDevice(script_with(ConditionProfile(2.0, 0.0), 4))
    assert list(dev) == [2.0, 2.0, 2.0, 2.0]


def test_sample_condition_ignores_timeline():
    script = SimScript(profiles={"a": ConditionProfile(5.0, 0.0)})
    dev = SimDevice(script)
    assert list(dev.sample_condition("a", 3)) == [5.0, 5.0, 5.0]
    with pytest.raises(KeyError):
        dev.sample_condition("missing", 1)


def test_timeline_label_must_have_profile():
    with pytest.raises(ValueError):
        SimScript(profiles={}, timeline=[("ghost", 5)])


def test_profile_validation():
    with pytest.raises(ValueError):
        ConditionProfile(-1.0, 1.0)
    with pytest.raises(ValueError):
        ConditionProfile(1.0, 1.0, zero_inflation=1.5)


def test_json_round_trip(tmp_path):
    script = SimScript(
        profiles={"idle": ConditionProfile(3.4, 2.3),
                  "burst": ConditionProfile(137.7, 20.3, zero_inflation=0.1)},
        timeline=[("idle", 10), ("burst", 5)],
        seed=99,
        cyclic=True,
    )
    path = tmp_path / "script.json"
    script.save(path)
    loaded = SimScript.load(path)
    assert loaded == script

    kind, parsed = parse_device(f"sim:{path}")
    assert kind == "sim" and parsed == script
    assert parse_device("hw") == ("hw", None)
    assert parse_device(None) == ("hw", None)
    with pytest.raises(ValueError):
        parse_device("gpu:foo")
