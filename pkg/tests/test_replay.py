import os

import pytest
from fake_model import FakeModel

from decomp_refine.backend import BackendConfig, FixtureBackend, HttpBackend, RecordingBackend
from decomp_refine.corpus import load_samples
from decomp_refine.harness import RunConfig, evaluate_benchmark, emit_report


def test_http_record_matches_replay(demo_dir, toolchain, tmp_path):
    """Full pipeline over HTTP, recorded, then replayed from the recording."""
    samples = [s for s in load_samples(demo_dir["samples"]) if s.opt_level == "O3"]
    rec_dir = tmp_path / "recorded"
    with FakeModel(fixtures_dir=demo_dir["fixtures"]) as fake:
        live = RecordingBackend(HttpBackend(BackendConfig(endpoint_url=fake.url, model_name="fake")), rec_dir)
        first = evaluate_benchmark(samples, live, live, toolchain, RunConfig(workers=4, opt_levels=("O3",)))
    replay = FixtureBackend(rec_dir)
    second = evaluate_benchmark(samples, replay, replay, toolchain, RunConfig(workers=4, opt_levels=("O3",)))
    assert [r.comparable() for r in first] == [r.comparable() for r in second]
    # decision log shape, as the live smoke test checks it
    for r in first:
        assert set(r.decision["candidates"]) == {"sem", "syn"}
        assert r.decision["chosen_path"] == r.selected_path


BENCH = os.environ.get("DECOMP_REFINE_BENCHMARK")


@pytest.mark.skipif(not BENCH, reason="set DECOMP_REFINE_BENCHMARK=<samples.jsonl> and DECOMP_REFINE_FIXTURES")
def test_full_benchmark(toolchain, tmp_path):
    samples = load_samples(BENCH)
    b = FixtureBackend(os.environ["DECOMP_REFINE_FIXTURES"])
    recs = evaluate_benchmark(samples, b, b, toolchain, RunConfig(workers=os.cpu_count() or 4))
    assert len(recs) == len(samples)
    text, _ = emit_report(recs)
    print(text)
