import json

import pytest

import figsynth


def test_chart_types_and_space():
    types = figsynth.chart_types()
    assert len(types) == 10
    assert "v-grouped-bar" in types
    assert all(figsynth.appearance_space_size(t) >= 2000 for t in types)


def test_random_data_validates_and_round_trips():
    for i, t in enumerate(figsynth.chart_types()):
        data = figsynth.random_chart_data(t, i)
        assert figsynth.validate(data) == []
        text = figsynth.canonical_json(data)
        assert figsynth.parse_chart_data(text, t, data["topic"]) == json.loads(text)


def test_validation_reports_paths():
    data = figsynth.random_chart_data("pie", 3)
    data["series"][0]["points"][0]["value"] = -5
    rules = {rule for _, rule, _ in figsynth.validate(data)}
    assert "pie-positive" in rules


def test_render_is_deterministic_png():
    data = figsynth.random_chart_data("line", 1)
    app = figsynth.sample_appearance("line", 1)
    png, h = figsynth.render(data, app)
    png2, h2 = figsynth.render(data, app)
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    assert (png, h) == (png2, h2)
    other = dict(app, legend_mode="absent" if app["legend_mode"] != "absent" else "upper-left")
    assert figsynth.render(data, other)[1] != h


def test_render_rejects_bad_appearance():
    data = figsynth.random_chart_data("pie", 1)
    app = dict(figsynth.fixed_appearance("pie"), legend_mode="absent")
    with pytest.raises(figsynth.RenderError):
        figsynth.render(data, app)


def test_template_qas_verify():
    data = figsynth.random_chart_data("v-stacked-bar", 4)
    qas = figsynth.template_qas(data, seed=2, k=4)
    assert len(qas) == 4
    for qa in qas:
        status, oracle = figsynth.verify_qa(data, qa["question"], qa["answer"])
        assert status == "pass"
        assert oracle == qa["answer"]


def test_relaxed_match():
    assert figsynth.relaxed_match("104", "100")
    assert not figsynth.relaxed_match("106", "100")
    assert figsynth.relaxed_match("RED", "red")
    assert not figsynth.relaxed_match("0.1", "0")


def test_pipeline_round_trip(tmp_path):
    out = tmp_path / "ds"
    cfg = {"figures_per_type": 1, "output_dir": str(out), "parallelism": 2}
    pools = figsynth.topics(cfg)["pools"]
    assert len(pools) == 10
    result = figsynth.generate(cfg)
    assert result["produced"] == 10 and result["failed"] == 0
    assert figsynth.stats(out)["figure_count"] == 10
    counts = figsynth.export_training(out, tmp_path / "train.jsonl", token="both",
                                      splits={"train": 0.8, "val": 0.1, "test": 0.1})
    assert sum(counts.values()) == result["stats"]["qa_count"]
    first = json.loads((tmp_path / "train.train.jsonl").read_text().splitlines()[0])
    assert first["input_text"].startswith("<chartqa> <synthetic_qa> ")


def test_config_rejects_api_key(tmp_path):
    with pytest.raises(figsynth.ConfigError):
        figsynth.topics({"output_dir": str(tmp_path), "gateway": {"api_key": "sk-nope"}})


def test_missing_key_is_reported(tmp_path, monkeypatch):
    monkeypatch.delenv("FIGSYNTH_PY_UNSET", raising=False)
    cfg = {"output_dir": str(tmp_path), "gateway": {"mode": "real", "api_key_env": "FIGSYNTH_PY_UNSET"}}
    with pytest.raises(figsynth.MissingApiKey):
        figsynth.generate(cfg)


def test_eval_files(tmp_path):
    (tmp_path / "g.jsonl").write_text('{"id": "a", "answer": "100"}\n{"id": "b", "answer": "0"}\n')
    (tmp_path / "p.jsonl").write_text('{"id": "a", "answer": "104"}\n{"id": "b", "answer": "0.5"}\n')
    report = figsynth.eval_files(tmp_path / "p.jsonl", tmp_path / "g.jsonl")
    assert report["n"] == 2 and report["correct"] == 1
