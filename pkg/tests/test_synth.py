"""Scheduler behavior: retries, failure recording, checkpointed resume,
and the in-flight concurrency bound."""

import json
import threading

import pytest

from linkqa.ingest import Document, DocumentStore
from linkqa.motifs import CO_MENTION, DUAL_LINK, MotifPair
from linkqa.synth import (
    Checkpoint,
    EndpointError,
    RetryPolicy,
    SynthesisFailure,
    SynthesisParams,
    TransientEndpointError,
    read_raw_completions,
    run_synthesis,
    synthesize_pair,
)


def make_store(n=6):
    store = DocumentStore()
    for i in range(n):
        store.add(
            Document(doc_id=i, title=f"Doc {i}", text=f"Body text {i}.", links=())
        )
    return store


def fast_retry(**kwargs):
    return RetryPolicy(base_delay=0.0, jitter=False, sleep=lambda _: None, **kwargs)


class FixedClient:
    def __init__(self, text="Question: q?\nAnswer: a. Therefore, done."):
        self.text = text
        self.calls = 0

    def complete(self, prompt, params):
        self.calls += 1
        return self.text, "stop"


class FlakyClient(FixedClient):
    def __init__(self, failures, **kwargs):
        super().__init__(**kwargs)
        self.failures = failures

    def complete(self, prompt, params):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransientEndpointError("simulated outage")
        return self.text, "stop"


class AlwaysFailingClient:
    def __init__(self):
        self.calls = 0

    def complete(self, prompt, params):
        self.calls += 1
        raise TransientEndpointError("permanently down")


class RejectingClient:
    def complete(self, prompt, params):
        raise EndpointError("request too large")


class TestSynthesizePair:
    def test_mock_fixed_text(self):
        client = FixedClient()
        result = synthesize_pair(
            client, MotifPair(0, 1, DUAL_LINK), make_store(), SynthesisParams()
        )
        assert result.completion_text == client.text
        assert result.attempt == 1
        assert result.endpoint_finish_reason == "stop"
        assert result.a_title == "Doc 0"
        assert result.b_title == "Doc 1"
        assert result.prompt_chars > 0

    def test_two_failures_then_success(self):
        client = FlakyClient(failures=2)
        result = synthesize_pair(
            client,
            MotifPair(0, 1, DUAL_LINK),
            make_store(),
            SynthesisParams(),
            retry=fast_retry(),
        )
        assert result.attempt == 3

    def test_retries_exhausted(self):
        client = AlwaysFailingClient()
        with pytest.raises(SynthesisFailure) as info:
            synthesize_pair(
                client,
                MotifPair(0, 1, DUAL_LINK),
                make_store(),
                SynthesisParams(),
                retry=fast_retry(),
            )
        assert client.calls == 6
        assert info.value.attempts == 6

    def test_non_retryable_fails_immediately(self):
        with pytest.raises(SynthesisFailure) as info:
            synthesize_pair(
                RejectingClient(),
                MotifPair(0, 1, DUAL_LINK),
                make_store(),
                SynthesisParams(),
                retry=fast_retry(),
            )
        assert info.value.attempts == 1

    def test_backoff_delays_grow(self):
        delays = []
        retry = RetryPolicy(
            base_delay=1.0, factor=2.0, jitter=False, sleep=delays.append
        )
        client = FlakyClient(failures=3)
        synthesize_pair(
            client, MotifPair(0, 1, DUAL_LINK), make_store(), SynthesisParams(), retry
        )
        assert delays == [1.0, 2.0, 4.0]

    def test_three_doc_mode_requires_hub(self):
        with pytest.raises(SynthesisFailure):
            synthesize_pair(
                FixedClient(),
                MotifPair(0, 1, CO_MENTION, hub=None),
                make_store(),
                SynthesisParams(mode="three_doc"),
                retry=fast_retry(),
            )

    def test_unknown_doc_id_fails(self):
        with pytest.raises(SynthesisFailure):
            synthesize_pair(
                FixedClient(),
                MotifPair(0, 99, DUAL_LINK),
                make_store(),
                SynthesisParams(),
                retry=fast_retry(),
            )


def pairs_n(n):
    return [MotifPair(i, i + 1, DUAL_LINK if i % 2 == 0 else CO_MENTION,
                      hub=None if i % 2 == 0 else 0) for i in range(0, 2 * n, 2)]


class TestRunSynthesis:
    def test_ten_pairs_all_succeed(self, tmp_path):
        pairs = pairs_n(5)
        store = make_store(12)
        report = run_synthesis(
            pairs,
            store,
            FixedClient(),
            SynthesisParams(),
            str(tmp_path / "raw.jsonl"),
            str(tmp_path / "ckpt.json"),
            retry=fast_retry(),
        )
        assert report.as_dict() == {
            "requested": 5,
            "succeeded": 5,
            "failed": 0,
            "skipped": 0,
        }
        records = list(read_raw_completions(str(tmp_path / "raw.jsonl")))
        assert len(records) == 5
        assert [(r["a"], r["b"]) for r in records] == [(p.a, p.b) for p in pairs]

    def test_zero_pairs(self, tmp_path):
        report = run_synthesis(
            [],
            make_store(),
            FixedClient(),
            SynthesisParams(),
            str(tmp_path / "raw.jsonl"),
            str(tmp_path / "ckpt.json"),
        )
        assert report.as_dict() == {
            "requested": 0,
            "succeeded": 0,
            "failed": 0,
            "skipped": 0,
        }
        assert (tmp_path / "raw.jsonl").read_bytes() == b""

    def test_failed_pairs_recorded_not_raised(self, tmp_path):
        pairs = pairs_n(3)
        report = run_synthesis(
            pairs,
            make_store(),
            AlwaysFailingClient(),
            SynthesisParams(),
            str(tmp_path / "raw.jsonl"),
            str(tmp_path / "ckpt.json"),
            retry=fast_retry(),
        )
        assert report.failed == 3
        records = list(read_raw_completions(str(tmp_path / "raw.jsonl")))
        assert all(r["error"] for r in records)
        assert all(r["completion"] is None for r in records)

    def test_limit_then_resume(self, tmp_path):
        pairs = pairs_n(5)
        store = make_store(12)
        out, ckpt = str(tmp_path / "raw.jsonl"), str(tmp_path / "ckpt.json")
        first = run_synthesis(
            pairs, store, FixedClient(), SynthesisParams(), out, ckpt,
            limit=3, retry=fast_retry(),
        )
        assert first.as_dict() == {
            "requested": 3, "succeeded": 3, "failed": 0, "skipped": 0,
        }
        second = run_synthesis(
            pairs, store, FixedClient(), SynthesisParams(), out, ckpt,
            retry=fast_retry(),
        )
        assert second.as_dict() == {
            "requested": 2, "succeeded": 2, "failed": 0, "skipped": 3,
        }
        keys = [(r["a"], r["b"]) for r in read_raw_completions(out)]
        assert keys == [(p.a, p.b) for p in pairs]

    def test_interrupt_then_resume_no_rerequest(self, tmp_path):
        pairs = pairs_n(10)
        store = make_store(25)
        out, ckpt = str(tmp_path / "raw.jsonl"), str(tmp_path / "ckpt.json")

        class InterruptingClient(FixedClient):
            def complete(self, prompt, params):
                if self.calls >= 5:
                    raise KeyboardInterrupt
                return super().complete(prompt, params)

        with pytest.raises(KeyboardInterrupt):
            run_synthesis(
                pairs, store, InterruptingClient(), SynthesisParams(), out, ckpt,
                concurrency=1, retry=fast_retry(),
            )
        assert Checkpoint.load(ckpt).pairs_completed == 5

        resumed_client = FixedClient()
        report = run_synthesis(
            pairs, store, resumed_client, SynthesisParams(), out, ckpt,
            concurrency=1, retry=fast_retry(),
        )
        assert report.skipped == 5
        assert report.requested == 5
        assert resumed_client.calls == 5
        keys = [(r["a"], r["b"]) for r in read_raw_completions(out)]
        assert keys == [(p.a, p.b) for p in pairs]

    def test_resume_with_concurrency_covers_all_keys(self, tmp_path):
        pairs = pairs_n(9)
        store = make_store(30)
        out, ckpt = str(tmp_path / "raw.jsonl"), str(tmp_path / "ckpt.json")
        baseline = str(tmp_path / "baseline.jsonl")
        run_synthesis(
            pairs, store, FixedClient(), SynthesisParams(), baseline,
            str(tmp_path / "b.ckpt"), concurrency=4, retry=fast_retry(),
        )
        run_synthesis(
            pairs, store, FixedClient(), SynthesisParams(), out, ckpt,
            concurrency=4, limit=4, retry=fast_retry(),
        )
        run_synthesis(
            pairs, store, FixedClient(), SynthesisParams(), out, ckpt,
            concurrency=4, retry=fast_retry(),
        )
        resumed = {(r["a"], r["b"]) for r in read_raw_completions(out)}
        uninterrupted = {(r["a"], r["b"]) for r in read_raw_completions(baseline)}
        assert resumed == uninterrupted

    def test_checkpoint_mismatch_detected(self, tmp_path):
        store = make_store(12)
        out, ckpt = str(tmp_path / "raw.jsonl"), str(tmp_path / "ckpt.json")
        run_synthesis(
            pairs_n(3), store, FixedClient(), SynthesisParams(), out, ckpt,
            retry=fast_retry(),
        )
        different = [MotifPair(i, i + 1, DUAL_LINK) for i in range(5, 11)]
        with pytest.raises(ValueError):
            run_synthesis(
                different, store, FixedClient(), SynthesisParams(), out, ckpt,
                retry=fast_retry(),
            )

    def test_in_flight_bound_respected(self, tmp_path):
        lock = threading.Lock()
        state = {"current": 0, "peak": 0}

        class CountingClient(FixedClient):
            def complete(self, prompt, params):
                with lock:
                    state["current"] += 1
                    state["peak"] = max(state["peak"], state["current"])
                try:
                    threading.Event().wait(0.01)
                    return super().complete(prompt, params)
                finally:
                    with lock:
                        state["current"] -= 1

        run_synthesis(
            pairs_n(12),
            make_store(30),
            CountingClient(),
            SynthesisParams(),
            str(tmp_path / "raw.jsonl"),
            str(tmp_path / "ckpt.json"),
            concurrency=3,
            retry=fast_retry(),
        )
        assert 1 <= state["peak"] <= 3

    def test_unwritable_sink_aborts_before_requests(self, tmp_path):
        client = FixedClient()
        with pytest.raises(OSError):
            run_synthesis(
                pairs_n(2),
                make_store(),
                client,
                SynthesisParams(),
                str(tmp_path / "missing-dir" / "raw.jsonl"),
                str(tmp_path / "ckpt.json"),
                retry=fast_retry(),
            )
        assert client.calls == 0

    def test_records_are_json_lines(self, tmp_path):
        out = str(tmp_path / "raw.jsonl")
        run_synthesis(
            pairs_n(2), make_store(), FixedClient(), SynthesisParams(), out,
            str(tmp_path / "ckpt.json"), retry=fast_retry(),
        )
        with open(out, "r", encoding="utf-8") as fh:
            for line in fh:
                record = json.loads(line)
                assert {"a", "b", "relation", "completion", "error"} <= set(record)


class TestParamsValidation:
    def test_defaults_valid(self):
        params = SynthesisParams()
        assert params.temperature == 0.7
        assert params.top_p == 0.8
        assert params.max_output_tokens == 32_768
        assert params.passage_char_limit == 50_000
        assert params.qa_per_pair == 1

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"temperature": -0.1},
            {"top_p": 0.0},
            {"top_p": 1.5},
            {"passage_char_limit": 0},
            {"qa_per_pair": 0},
            {"mode": "both_docs"},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            SynthesisParams(**kwargs)
