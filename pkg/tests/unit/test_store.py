"""Tests for artifact formats and the result store."""
import json

import numpy as np
import pytest

from ias_lab.lab.exceptions import ModelNotFound, StoreError
from ias_lab.lab.predictor import lm_fit
from ias_lab.lab.store import (
    PROFILE_HEADER,
    ResultStore,
    load_model,
    model_from_payload,
    model_to_payload,
    read_points_csv,
    read_profile_csv,
    read_workload_csv,
    write_profile_csv,
    write_workload_csv,
)
from ias_lab.models.interference import QuadraticInterferenceModel
from ias_lab.models.task import FileKind
from tests.fixtures import LabDataBuilder


class TestWorkloadCsv:
    """Test the workload file."""

    def test_exact_bytes(self, tmp_path, builder):
        tasks = [
            builder.task("t1", kind=FileKind.PDF, size=10.5, processes=2, io_rate=3.0),
            builder.task("t2", kind=FileKind.TEXT, size=1.0, processes=1, io_rate=0.25, arrival=4.5),
        ]
        path = write_workload_csv(tmp_path / "w.csv", tasks)
        assert path.read_bytes() == (
            b"id,file_kind,data_size_mb,process_count,io_rate,arrival_s\n"
            b"t1,pdf,10.5,2,3.0,0.0\n"
            b"t2,text,1.0,1,0.25,4.5\n"
        )

    def test_read_rederives_base_runtime(self, tmp_path, builder):
        path = write_workload_csv(tmp_path / "w.csv", [builder.task("t1", kind=FileKind.PDF, size=10.0)])
        (task,) = read_workload_csv(path)
        assert task.base_runtime == pytest.approx(0.4 * 10.0)
        assert task.file_kind == FileKind.PDF

    def test_bad_header(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("name,kind\nx,pdf\n", encoding="utf-8")
        with pytest.raises(StoreError) as exc_info:
            read_workload_csv(path)
        assert exc_info.value.context["path"] == str(path)
        assert exc_info.value.exit_code == 4

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text(
            "id,file_kind,data_size_mb,process_count,io_rate,arrival_s\nt1,video,1.0,1,0.0,0.0\n", encoding="utf-8"
        )
        with pytest.raises(StoreError) as exc_info:
            read_workload_csv(path)
        assert exc_info.value.context["line"] == 2

    def test_empty_file(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(StoreError):
            read_workload_csv(path)


class TestProfileCsv:
    """Test the profile dataset file."""

    def test_header(self):
        assert ",".join(PROFILE_HEADER) == (
            "vm1_p1,vm1_p2,vm1_p3,vm1_p4,vm1_p5,vm2_p1,vm2_p2,vm2_p3,vm2_p4,vm2_p5,runtime_s"
        )

    def test_written_header_line(self, tmp_path):
        samples = LabDataBuilder.samples_from_model(QuadraticInterferenceModel(c=1.0), np.ones((1, 5)), np.ones((1, 5)))
        path = write_profile_csv(tmp_path / "profile.csv", samples)
        first = path.read_text(encoding="utf-8").splitlines()[0]
        assert first == "vm1_p1,vm1_p2,vm1_p3,vm1_p4,vm1_p5,vm2_p1,vm2_p2,vm2_p3,vm2_p4,vm2_p5,runtime_s"

    def test_values_survive_exactly(self, tmp_path, gen):
        model = QuadraticInterferenceModel(c=3.0)
        samples = LabDataBuilder.samples_from_model(model, gen.uniform(0, 7, (5, 5)), gen.uniform(0, 7, (5, 5)))
        path = write_profile_csv(tmp_path / "profile.csv", samples)
        assert read_profile_csv(path) == samples


class TestPointsCsv:
    """Test clustering point files."""

    def test_without_header(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("1,2\n3,4\n", encoding="utf-8")
        points = read_points_csv(path)
        assert [p.coords for p in points] == [(1.0, 2.0), (3.0, 4.0)]

    def test_weight_column(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,weight,y\n1,3,2\n", encoding="utf-8")
        (point,) = read_points_csv(path)
        assert point.coords == (1.0, 2.0)
        assert point.weight == 3.0

    def test_malformed(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,y\n1,two\n", encoding="utf-8")
        with pytest.raises(StoreError) as exc_info:
            read_points_csv(path)
        assert exc_info.value.context["line"] == 2


class TestModelFiles:
    """Test model serialization."""

    def test_hex_coefficients_are_exact(self, tmp_path, gen):
        model = LabDataBuilder.random_model(gen, scale=1e3)
        store = ResultStore(tmp_path, "exp", timestamp=False)
        path = store.write_model(store.path("profile-fit", "model.json"), model)
        loaded = load_model(path)
        assert np.array_equal(loaded.to_vector(), model.to_vector())

    def test_payload_carries_the_fit_report(self, gen):
        truth = LabDataBuilder.random_model(gen)
        samples = LabDataBuilder.samples_from_model(
            truth, LabDataBuilder.random_features(gen, 80), LabDataBuilder.random_features(gen, 80), offset=100.0
        )
        _, report = lm_fit(samples, QuadraticInterferenceModel.zeros())
        payload = model_to_payload(truth, report)
        assert payload["fit_report"]["n_samples"] == 80
        assert len(payload["coefficients"]) == 66

    def test_missing_model(self, tmp_path):
        with pytest.raises(ModelNotFound) as exc_info:
            load_model(tmp_path / "model.json")
        assert exc_info.value.exit_code == 5
        assert exc_info.value.path == str(tmp_path / "model.json")

    def test_not_json(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("not json", encoding="utf-8")
        with pytest.raises(StoreError):
            load_model(path)

    @pytest.mark.parametrize(
        "change",
        [
            {"schema_version": 2},
            {"flattening_order": "alpha|c"},
            {"coefficients": ["0x0p+0"] * 65},
            {"coefficients": ["zero"] * 66},
        ],
    )
    def test_invalid_payloads(self, change):
        payload = model_to_payload(QuadraticInterferenceModel())
        payload.update(change)
        with pytest.raises(StoreError):
            model_from_payload(payload)


class TestResultStore:
    """Test the directory layout and JSON formatting."""

    def test_layout(self, tmp_path):
        store = ResultStore(tmp_path, "exp")
        assert store.path("compare", "trial-000", "fgka_pp", "metrics.json") == (
            tmp_path / "exp" / "compare" / "trial-000" / "fgka_pp" / "metrics.json"
        )

    def test_json_without_timestamp(self, tmp_path):
        store = ResultStore(tmp_path, "exp", timestamp=False)
        path = store.write_json(store.path("gen", "x.json"), {"b": 1, "a": [1, 2]})
        assert path.read_text(encoding="utf-8") == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'

    def test_json_with_timestamp(self, tmp_path):
        store = ResultStore(tmp_path, "exp")
        path = store.write_json(store.path("gen", "x.json"), {"a": 1})
        assert "generated_at" in json.loads(path.read_text(encoding="utf-8"))

    def test_csv_uses_repr_floats(self, tmp_path):
        store = ResultStore(tmp_path, "exp")
        path = store.write_csv(store.path("compare", "s.csv"), ["v"], [[0.1 + 0.2]])
        assert path.read_text(encoding="utf-8") == "v\n0.30000000000000004\n"

    def test_unwritable_location(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        store = ResultStore(blocker, "exp")
        with pytest.raises(StoreError):
            store.write_text(store.path("gen", "out.txt"), "data")
