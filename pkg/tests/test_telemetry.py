"""Wire protocol, publisher, and persistence tests, including decode fuzzing."""

import math
import random
import string

import numpy as np
import pytest

from robonurse.telemetry import (
    CommandIngestError,
    DecodeError,
    Delivery,
    FrameStream,
    LatencyModel,
    OutboundQueue,
    PublisherConfig,
    TelemetryFrame,
    decode_frame,
    encode_frame,
    iter_replay,
    parse_command_frame,
    persist,
    publish,
    read_log,
)


def sample_frames():
    return [
        TelemetryFrame(type="vitals", seq=0, sim_time=12.5, patient="B03",
                       payload={"hr": 82.41, "spo2": 97.2, "temp_f": 98.7, "flags": "normal"}),
        TelemetryFrame(type="med", seq=1, sim_time=13.0, patient="B03",
                       payload={"cylinder": 2, "duration": 2.88, "medicine": "M02"}),
        TelemetryFrame(type="mode", seq=2, sim_time=13.5,
                       payload={"mode": "navigating", "node": "B04", "purpose": "routine"}),
        TelemetryFrame(type="alert", seq=3, sim_time=14.0, patient="B05",
                       payload={"reason": "out-of-stock", "detail": "cylinder 2 empty"}),
        TelemetryFrame(type="pose", seq=4, sim_time=14.5,
                       payload={"x": 1.25, "y": -0.5, "heading": 3.14159, "battery": 0.92}),
        TelemetryFrame(type="ack", seq=5, sim_time=15.0,
                       payload={"cmd_id": 7, "status": "accepted", "ref": "c-1"}),
        TelemetryFrame(type="cmd", seq=6, sim_time=15.5,
                       payload={"kind": "priority_checkup", "node": "B02"}),
    ]


class TestEncodeDecode:
    def test_round_trip_every_type(self):
        for frame in sample_frames():
            assert decode_frame(encode_frame(frame)) == frame

    def test_values_with_spaces_survive(self):
        frame = TelemetryFrame(type="alert", seq=1, sim_time=1.0,
                               payload={"detail": "cylinder 2 empty (M02)"})
        assert decode_frame(encode_frame(frame)) == frame

    def test_float_precision_preserved(self):
        frame = TelemetryFrame(type="pose", seq=0, sim_time=0.1 + 0.2,
                               payload={"x": 1.0 / 3.0})
        decoded = decode_frame(encode_frame(frame))
        assert decoded.sim_time == frame.sim_time
        assert decoded.payload["x"] == frame.payload["x"]

    def test_truncated_line_rejected(self):
        line = encode_frame(sample_frames()[0])
        with pytest.raises(DecodeError):
            decode_frame(line[: len(line) // 2])

    def test_bad_version_rejected(self):
        with pytest.raises(DecodeError) as err:
            decode_frame("v2 type=pose seq=0 t=0.0")
        assert err.value.offset == 0

    def test_missing_header_rejected(self):
        with pytest.raises(DecodeError):
            decode_frame("v1 type=pose seq=0")

    def test_unknown_type_rejected(self):
        with pytest.raises(DecodeError):
            decode_frame("v1 type=bogus seq=0 t=0.0")

    def test_fuzz_never_crashes(self):
        rng = random.Random(1337)
        alphabet = string.printable
        good, bad = 0, 0
        for _ in range(100_000):
            n = rng.randint(0, 60)
            line = "".join(rng.choice(alphabet) for _ in range(n))
            try:
                decode_frame(line)
                good += 1
            except DecodeError:
                bad += 1
        assert good + bad == 100_000

    def test_fuzzed_valid_frames_round_trip(self):
        rng = random.Random(7)
        for _ in range(500):
            payload = {}
            for k in range(rng.randint(0, 5)):
                key = f"k{k}"
                kind = rng.randint(0, 2)
                if kind == 0:
                    payload[key] = rng.randint(-1000, 1000)
                elif kind == 1:
                    payload[key] = rng.uniform(-1e6, 1e6)
                else:
                    payload[key] = "".join(
                        rng.choice(string.ascii_letters + " ,=%\t")
                        for _ in range(rng.randint(1, 12))
                    )
            frame = TelemetryFrame(
                type="alert",
                seq=rng.randint(0, 10_000),
                sim_time=rng.uniform(0, 1e5),
                patient=rng.choice([None, "B01", "B08"]),
                payload=payload,
            )
            assert decode_frame(encode_frame(frame)) == frame


class TestLatencyModel:
    def test_samples_in_range_and_mean(self):
        sampler = LatencyModel(seed=42).sampler()
        samples = [sampler.sample_ms() for _ in range(10_000)]
        assert all(500.0 <= s <= 1200.0 for s in samples)
        assert abs(float(np.mean(samples)) - 850.0) <= 30.0

    def test_reproducible_with_seed(self):
        a = LatencyModel(seed=5).sampler()
        b = LatencyModel(seed=5).sampler()
        assert [a.sample_ms() for _ in range(100)] == [b.sample_ms() for _ in range(100)]


class TestPublish:
    def test_batch_count_for_10s_vitals(self):
        stream = FrameStream()
        frames = [
            stream.make("vitals", i * 0.1, patient="B01", hr=70.0) for i in range(100)
        ]
        deliveries = publish(frames, PublisherConfig(), LatencyModel(seed=1))
        batch_sends = {round(d.deliver_time, 6) for d in deliveries}
        assert len(deliveries) == math.floor(10_000 / 1100) == 9
        assert len(batch_sends) == 9

    def test_delivery_monotone_per_stream(self):
        stream = FrameStream()
        frames = [stream.make("alert", 0.01 * i, reason="r") for i in range(200)]
        deliveries = publish(frames, PublisherConfig(), LatencyModel(seed=3))
        times = [d.deliver_time for d in deliveries]
        assert times == sorted(times)

    def test_delay_within_model_range(self):
        stream = FrameStream()
        frames = [stream.make("alert", float(i), reason="r") for i in range(100)]
        cfg = PublisherConfig()
        deliveries = publish(frames, cfg, LatencyModel(seed=9))
        for frame, delivery in zip(frames, deliveries):
            delay_ms = (delivery.deliver_time - frame.sim_time) * 1000.0
            assert 500.0 + cfg.serial_delay_ms - 1e-6 <= delay_ms

    def test_event_frames_not_batched(self):
        stream = FrameStream()
        frames = [stream.make("med", 0.1, cylinder=1), stream.make("med", 0.2, cylinder=2)]
        deliveries = publish(frames, PublisherConfig(), LatencyModel(seed=2))
        assert len(deliveries) == 2


class TestOutboundQueue:
    def test_drop_count_equals_gap(self):
        queue = OutboundQueue(limit=10)
        stream = FrameStream()
        for i in range(25):
            queue.push(stream.make("pose", float(i), x=0.0))
        frames, dropped = queue.drain()
        assert len(frames) == 10
        assert dropped == 15
        # The seq gap across the drop equals the reported count.
        assert frames[0].seq == 15

    def test_no_drop_no_gap(self):
        queue = OutboundQueue(limit=100)
        stream = FrameStream()
        for i in range(20):
            queue.push(stream.make("pose", float(i), x=0.0))
        frames, dropped = queue.drain()
        assert dropped == 0
        assert [f.seq for f in frames] == list(range(20))


class TestCommandIngest:
    def test_valid_command_parses(self):
        line = encode_frame(
            TelemetryFrame(type="cmd", seq=0, sim_time=0.0,
                           payload={"kind": "priority_checkup", "node": "B02"})
        )
        frame = parse_command_frame(line)
        assert frame.payload["kind"] == "priority_checkup"

    def test_unknown_kind_rejected(self):
        line = encode_frame(
            TelemetryFrame(type="cmd", seq=0, sim_time=0.0, payload={"kind": "dance"})
        )
        with pytest.raises(CommandIngestError):
            parse_command_frame(line)

    def test_non_cmd_frame_rejected(self):
        line = encode_frame(TelemetryFrame(type="pose", seq=0, sim_time=0.0))
        with pytest.raises(CommandIngestError):
            parse_command_frame(line)

    def test_garbage_rejected(self):
        with pytest.raises(CommandIngestError):
            parse_command_frame("!!!")


class TestPersistReplay:
    def test_round_trip_byte_identity(self, tmp_path):
        frames = sample_frames()
        path = tmp_path / "run.log"
        persist(frames, path)
        original = path.read_bytes()
        loaded, skipped = read_log(path)
        assert skipped == 0
        assert loaded == frames
        path2 = tmp_path / "replayed.log"
        persist(loaded, path2)
        assert path2.read_bytes() == original

    def test_corrupt_line_skipped_with_count(self, tmp_path):
        frames = sample_frames()
        path = tmp_path / "run.log"
        persist(frames, path)
        lines = path.read_text().splitlines()
        lines[2] = lines[2][:10]  # truncate one line
        path.write_text("\n".join(lines) + "\n")
        loaded, skipped = read_log(path)
        assert skipped == 1
        assert len(loaded) == len(frames) - 1

    def test_prefix_of_log_replayable(self, tmp_path):
        frames = sample_frames()
        path = tmp_path / "run.log"
        persist(frames, path)
        data = path.read_bytes()
        cut = data[: data.find(b"\n", len(data) // 2) + 1]
        prefix = tmp_path / "prefix.log"
        prefix.write_bytes(cut)
        loaded, skipped = read_log(prefix)
        assert skipped == 0
        assert loaded == frames[: len(loaded)]

    def test_replay_pacing(self):
        frames = [
            TelemetryFrame(type="pose", seq=i, sim_time=float(i), payload={})
            for i in range(4)
        ]
        fast = list(iter_replay(frames, speed=0.0))
        assert all(delay == 0.0 for delay, _ in fast)
        assert [f for _, f in fast] == frames
        paced = list(iter_replay(frames, speed=2.0))
        assert [round(d, 6) for d, _ in paced] == [0.0, 0.5, 0.5, 0.5]


class TestFrameStream:
    def test_seq_strictly_increasing(self):
        stream = FrameStream()
        seqs = [stream.make("pose", 0.0, x=1.0).seq for _ in range(10)]
        assert seqs == list(range(10))

    def test_time_never_decreases(self):
        stream = FrameStream()
        stream.make("pose", 5.0, x=1.0)
        frame = stream.make("pose", 4.0, x=1.0)
        assert frame.sim_time == 5.0
