import json

import pytest

from app.core.errors import IngestionError
from app.models.benchmarking import DecayDataset
from app.models.system import ZZSweepPoint
from app.services.dataset_service import DatasetService
from app.utils.helpers import file_digest


@pytest.fixture
def dataset_service():
    return DatasetService()


def test_read_sweep_csv(tmp_path, dataset_service):
    path = tmp_path / "sweep.csv"
    path.write_text("a_c, a_t, phi_d, zeta_mhz, sigma_mhz\n0.1,0.1,0.0,0.52,0.01\n0.2,0.2,3.14,-0.4,0.02\n")
    points = dataset_service.read_sweep_csv(path)
    assert len(points) == 2
    assert points[1].phi_d == pytest.approx(3.14)
    assert points[1].zeta_measured == pytest.approx(-0.4)
    assert points[0].zeta_uncertainty == pytest.approx(0.01)


def test_read_sweep_csv_reports_row_and_column(tmp_path, dataset_service):
    path = tmp_path / "sweep.csv"
    path.write_text("a_c,a_t,phi_d,zeta_mhz,sigma_mhz\n0.1,0.1,0.0,0.52,0.01\n0.2,abc,0.0,0.4,0.02\n")
    with pytest.raises(IngestionError) as exc:
        dataset_service.read_sweep_csv(path)
    assert exc.value.row == 2
    assert exc.value.column == "a_t"


def test_read_sweep_csv_rejects_zero_uncertainty(tmp_path, dataset_service):
    path = tmp_path / "sweep.csv"
    path.write_text("a_c,a_t,phi_d,zeta_mhz,sigma_mhz\n0.1,0.1,0.0,0.52,0\n")
    with pytest.raises(IngestionError) as exc:
        dataset_service.read_sweep_csv(path)
    assert exc.value.column == "sigma_mhz"


def test_read_sweep_csv_missing_column(tmp_path, dataset_service):
    path = tmp_path / "sweep.csv"
    path.write_text("a_c,a_t,zeta_mhz,sigma_mhz\n0.1,0.1,0.52,0.01\n")
    with pytest.raises(IngestionError) as exc:
        dataset_service.read_sweep_csv(path)
    assert exc.value.column == "phi_d"


def test_missing_file_is_ingestion_error(tmp_path, dataset_service):
    with pytest.raises(IngestionError):
        dataset_service.read_sweep_csv(tmp_path / "absent.csv")


def test_read_decay_csv_groups_and_sorts(tmp_path, dataset_service):
    path = tmp_path / "rb.csv"
    path.write_text("m,value\n32,0.41\n2,0.88\n16,0.6\n2,0.9\n")
    data = dataset_service.read_decay_csv(path, shots=1000)
    assert data.lengths == [2, 16, 32]
    assert data.values[0] == [0.88, 0.9]
    assert data.shots == 1000


def test_read_decay_csv_rejects_out_of_range(tmp_path, dataset_service):
    path = tmp_path / "rb.csv"
    path.write_text("m,value\n2,0.9\n16,1.3\n")
    with pytest.raises(IngestionError) as exc:
        dataset_service.read_decay_csv(path)
    assert exc.value.row == 2
    assert exc.value.column == "value"


def test_read_cb_csv(tmp_path, dataset_service):
    path = tmp_path / "cb.csv"
    path.write_text("pauli_label,p,sigma\nXX,0.99,0.001\nZI,0.995,0.002\n")
    assert dataset_service.read_cb_csv(path) == {"XX": (0.99, 0.001), "ZI": (0.995, 0.002)}


def test_read_cb_csv_rejects_duplicates(tmp_path, dataset_service):
    path = tmp_path / "cb.csv"
    path.write_text("pauli_label,p,sigma\nXX,0.99,0.001\nXX,0.98,0.001\n")
    with pytest.raises(IngestionError) as exc:
        dataset_service.read_cb_csv(path)
    assert exc.value.row == 2


def test_decay_csv_written_then_read(tmp_path, dataset_service):
    data = DecayDataset(lengths=[2, 16], values=[[0.9, 0.91], [0.6]])
    path = dataset_service.write_decay_csv(tmp_path / "out" / "rb.csv", data)
    assert path.read_text().splitlines() == ["m,value", "2,0.9", "2,0.91", "16,0.6"]
    assert dataset_service.read_decay_csv(path) == data


def test_write_sweep_csv_uses_aliases(tmp_path, dataset_service):
    points = [ZZSweepPoint(a_c=0.1, a_t=0.2, phi_d=0.0, zeta_mhz=0.5, sigma_mhz=0.01)]
    path = dataset_service.write_sweep_csv(tmp_path / "sweep.csv", points)
    assert path.read_text().splitlines()[0] == "a_c,a_t,phi_d,zeta_mhz,sigma_mhz"
    assert dataset_service.read_sweep_csv(path) == points


def test_write_csv_leaves_missing_values_empty(tmp_path, dataset_service):
    path = dataset_service.write_csv(tmp_path / "r.csv", [{"a": 1.0, "r_value": None}], ["a", "r_value"])
    assert path.read_text().splitlines()[1] == "1,"


def test_write_json_sorts_keys(tmp_path, dataset_service):
    path = dataset_service.write_json(tmp_path / "report.json", {"b": 1, "a": [1.5, 2]})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [1.5, 2], "b": 1}


def test_write_manifest(tmp_path, dataset_service, monkeypatch):
    monkeypatch.setattr(dataset_service, "package_versions", lambda: {"numpy": "1.26.4"})
    data_file = tmp_path / "in.csv"
    data_file.write_text("m,value\n")
    out_file = dataset_service.write_json(tmp_path / "report.json", {"x": 1})
    path = dataset_service.write_manifest(
        tmp_path, "fit rb", {"shots": 1000}, seed=7, flags={"clamped": 0},
        inputs=[data_file], outputs=[out_file],
    )
    manifest = json.loads(path.read_text())
    assert path.name == "manifest.json"
    assert sorted(manifest) == ["command", "config", "flags", "inputs", "outputs", "seed", "versions"]
    assert manifest["seed"] == 7
    assert manifest["versions"] == {"numpy": "1.26.4"}
    assert manifest["inputs"] == {"in.csv": file_digest(data_file)}
    assert manifest["outputs"]["report.json"] == file_digest(out_file)


def test_package_versions_reports_every_package(dataset_service):
    versions = dataset_service.package_versions()
    assert set(versions) == {"numpy", "scipy", "lmfit", "pydantic", "click"}
