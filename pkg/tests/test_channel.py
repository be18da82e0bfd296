import numpy as np
import pytest

from disorder.channel import (
    PRESET_NAMES,
    Dist,
    Receiver,
    ReceiveResult,
    SignalProfile,
    State,
    Symbol,
    accuracy,
    ascii_to_bits,
    bits_to_ascii,
    build_sim_script,
    classify_sample,
    classify_window,
    load_preset,
    loopback,
    random_bits,
    receive,
    send_bits,
)
from disorder.simdevice import SimDevice
from disorder.stats import t_score_single


def profile(window=3, cutoff=None, null=(0.0, 1.0), low_prime=False, duration=None,
            high=(100.0, 5.0), low=(50.0, 5.0)):
    return SignalProfile(
        high=Dist(*high), low=Dist(*low),
        null=None if cutoff is not None else Dist(*null),
        cutoff=cutoff, window_size=window, symbol_duration=duration,
        low_prime=low_prime)


class TestProfile:
    def test_exactly_one_null_mode(self):
        with pytest.raises(ValueError):
            SignalProfile(high=Dist(1, 1), low=Dist(0, 1))
        with pytest.raises(ValueError):
            SignalProfile(high=Dist(1, 1), low=Dist(0, 1),
                          null=Dist(0, 1), cutoff=2.0)

    def test_symbol_duration_defaults_to_window_plus_two(self):
        assert profile(window=5).symbol_duration == 7

    def test_presets_pin_the_published_distributions(self):
        arm = load_preset("arm")
        assert (arm.high.mean, arm.high.std) == (5859.1, 1469.9)
        assert (arm.low.mean, arm.low.std) == (3224.2, 709.9)
        assert (arm.null.mean, arm.null.std) == (437.5, 141.0)
        assert arm.window_size == 5 and arm.test == "MP"

        m1 = load_preset("m1")
        assert (m1.high.mean, m1.low.mean, m1.null.mean) == (137.7, 37.3, 3.4)
        assert m1.window_size == 5 and m1.test == "R"

        x86 = load_preset("x86")
        assert (x86.high.mean, x86.low.mean, x86.null.mean) == (803.6, 648.9, 241.0)

        m3 = load_preset("m3gpu")
        assert (m3.high.mean, m3.low.mean) == (12.4, 2.4)
        assert m3.cutoff == 1.0 and m3.null is None
        assert m3.window_size == 3 and m3.low_prime

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            load_preset("sparc")

    def test_json_round_trip(self, tmp_path):
        p = profile(cutoff=1.0, low_prime=True)
        path = tmp_path / "p.json"
        p.save(path)
        assert SignalProfile.load(path) == p


class TestClassifySample:
    def test_m1_high_sample(self):
        m1 = load_preset("m1")
        assert classify_sample(137.7, m1) is Symbol.HIGH

    def test_cutoff_zero_is_null(self):
        m3 = load_preset("m3gpu")
        assert classify_sample(0.0, m3) is Symbol.NULL
        assert classify_sample(12.0, m3) is Symbol.HIGH

    def test_tie_breaks_toward_low(self):
        p = profile(high=(10.0, 2.0), low=(6.0, 2.0), null=(0.0, 0.5))
        assert classify_sample(8.0, p) is Symbol.LOW

    def test_tie_breaks_toward_null_first(self):
        p = profile(high=(100.0, 1.0), low=(6.0, 2.0), null=(2.0, 2.0))
        assert classify_sample(4.0, p) is Symbol.NULL

    def test_zero_std_profile_matches_exact_value(self):
        p = profile(high=(100.0, 0.0), low=(50.0, 0.0), null=(0.0, 0.0))
        assert classify_sample(100.0, p) is Symbol.HIGH
        assert classify_sample(50.0, p) is Symbol.LOW
        assert classify_sample(0.0, p) is Symbol.NULL


class TestClassifyWindow:
    def test_majority(self):
        p = profile(window=5)
        samples = [100, 100, 50, 0, 100]
        assert classify_window(samples, p) is Symbol.HIGH

    def test_all_null(self):
        p = profile(window=3)
        assert classify_window([0, 0, 0], p) is Symbol.NULL

    def test_tie_retains_previous(self):
        p = profile(window=3)
        tied = [100, 50, 0]  # one vote each
        assert classify_window(tied, p, previous=Symbol.LOW) is Symbol.LOW
        assert classify_window(tied, p, previous=None) is Symbol.NULL

    def test_underfull_window_rejected(self):
        with pytest.raises(ValueError):
            classify_window([1.0], profile(window=3))

    def test_sliding_changes_votes_by_at_most_one(self):
        p = profile(window=5)
        rng = np.random.default_rng(0)
        stream = rng.choice([0.0, 50.0, 100.0], size=200)

        def votes(window):
            counts = {s: 0 for s in Symbol}
            for x in window:
                counts[classify_sample(x, p)] += 1
            return counts

        for i in range(len(stream) - 5):
            v1 = votes(stream[i:i + 5])
            v2 = votes(stream[i + 1:i + 6])
            assert all(abs(v1[s] - v2[s]) <= 1 for s in Symbol)

    def test_arm_profile_window_error_rate(self):
        arm = load_preset("arm")
        rng = np.random.default_rng(12)
        errors = 0
        total = 0
        for symbol, dist in ((Symbol.HIGH, arm.high), (Symbol.LOW, arm.low),
                             (Symbol.NULL, arm.null)):
            draws = np.rint(rng.normal(dist.mean, dist.std, size=600)).clip(min=0)
            for i in range(len(draws) - arm.window_size):
                window = draws[i:i + arm.window_size]
                total += 1
                if classify_window(window, arm, previous=symbol) is not symbol:
                    errors += 1
        assert errors / total < 0.05


class TestStateMachine:
    def test_standby_ignores_null(self):
        rx = Receiver(profile())
        assert rx.step(Symbol.NULL) is None
        assert rx.state is State.STANDBY

    def test_high_then_null_emits_one(self):
        rx = Receiver(profile())
        rx.step(Symbol.HIGH)
        assert rx.state is State.HIGH
        assert rx.step(Symbol.NULL) == "1"
        assert rx.state is State.STANDBY

    def test_low_then_null_emits_zero(self):
        rx = Receiver(profile())
        rx.step(Symbol.LOW)
        assert rx.state is State.LOW
        assert rx.step(Symbol.NULL) == "0"

    def test_low_prime_path(self):
        rx = Receiver(profile(low_prime=True))
        rx.step(Symbol.LOW)
        assert rx.state is State.LOW_PRIME
        rx.step(Symbol.LOW)
        assert rx.state is State.LOW

        rx = Receiver(profile(low_prime=True))
        rx.step(Symbol.LOW)
        rx.step(Symbol.HIGH)  # tentative low corrected to high
        assert rx.state is State.HIGH

        rx = Receiver(profile(low_prime=True))
        rx.step(Symbol.LOW)
        assert rx.step(Symbol.NULL) == "0"
        assert rx.state is State.STANDBY

    def test_self_loops_do_not_emit(self):
        rx = Receiver(profile())
        rx.step(Symbol.HIGH)
        assert rx.step(Symbol.LOW) is None  # stays in high
        assert rx.state is State.HIGH

    def test_one_bit_per_excursion(self):
        rng = np.random.default_rng(4)
        rx = Receiver(profile(low_prime=True))
        emitted = 0
        returns = 0
        for _ in range(2000):
            before = rx.state
            bit = rx.step(Symbol(rng.choice([s.value for s in Symbol])))
            after = rx.state
            if bit is not None:
                emitted += 1
            if before is not State.STANDBY and after is State.STANDBY:
                returns += 1
                assert bit is not None
            else:
                assert bit is None
        assert emitted == returns > 0


class TestEndToEnd:
    def test_two_bit_message_m1(self):
        m1 = load_preset("m1")
        result = loopback("10", m1, seed=6)
        assert result.bits == "10"

    def test_noiseless_decoding_is_exact(self):
        for window in (1, 2, 3, 4):
            p = profile(window=window, duration=window + 2,
                        high=(100.0, 0.0), low=(50.0, 0.0), null=(0.0, 0.0))
            bits = random_bits(64, np.random.default_rng(window))
            assert loopback(bits, p, seed=0).bits == bits

    def test_all_null_stream_decodes_nothing(self):
        p = profile()
        stream = iter([0.0] * 50)
        assert receive(stream, p).bits == ""

    def test_tumbling_window_mode(self):
        p = profile(window=3, duration=6,
                    high=(100.0, 0.0), low=(50.0, 0.0), null=(0.0, 0.0))
        bits = "1100101"
        script = build_sim_script(bits, p, seed=0)
        result = receive(SimDevice(script), p, tumbling=True)
        assert result.bits == bits
        # tumbling classifies once per full window, not once per sample
        assert result.windows_seen == result.samples_seen // p.window_size

    def test_truncation_mid_symbol(self):
        p = profile(window=3, duration=5, high=(100, 0), low=(50, 0), null=(0, 0))
        script = build_sim_script("1", p, seed=0)
        script.timeline = script.timeline[:1]  # stress frame without the pause
        result = receive(SimDevice(script), p)
        assert result.truncated and result.bits == ""

    def test_cutoff_and_distribution_modes_agree_near_zero_null(self):
        dist_mode = profile(window=3, high=(100.0, 4.0), low=(50.0, 4.0),
                            null=(0.0, 0.1))
        cut_mode = profile(window=3, cutoff=25.0,
                           high=(100.0, 4.0), low=(50.0, 4.0))
        rng = np.random.default_rng(8)
        for x in rng.uniform(0, 120, size=300):
            if 0.2 < x < 25:  # both modes call the gap region differently
                continue
            assert classify_sample(x, dist_mode) == classify_sample(x, cut_mode)

    def test_send_bits_counts_and_failures(self):
        calls = []

        def fake_runner(cfg, secs):
            calls.append(cfg)
            if len(calls) == 3:
                raise OSError("spawn failed")

        from disorder.channel import ChannelSendError
        with pytest.raises(ChannelSendError) as err:
            send_bits("1101", "HI", "LO", symbol_seconds=0.0,
                      run_stress=fake_runner)
        assert err.value.sent == 2
        assert calls == ["HI", "HI", "LO"]

    def test_empty_message_returns_immediately(self):
        assert send_bits("", "HI", "LO", symbol_seconds=0.0,
                         run_stress=lambda *a: None) == 0


class TestScoring:
    def test_identical(self):
        assert accuracy("1" * 104, "1" * 104) == 100.0

    def test_one_flip(self):
        bits = random_bits(104, np.random.default_rng(1))
        flipped = ("1" if bits[0] == "0" else "0") + bits[1:]
        assert accuracy(bits, flipped) == pytest.approx(100 * 103 / 104)

    def test_ascii_protocol_is_104_bits(self):
        message = "hello, world!"  # 13 ASCII characters
        bits = ascii_to_bits(message)
        assert len(bits) == 104
        assert bits_to_ascii(bits) == message
