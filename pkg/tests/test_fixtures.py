import json
import shutil

import pytest

from malcdf.errors import FixtureCorrupt
from malcdf.fixtures import fixtures_root, load_fixture
from malcdf.ontology import ThreatType


class TestBundle:
    def test_shape(self, paper_bundle):
        assert len(paper_bundle.dataset.records) == 50
        assert paper_bundle.dataset.attack_count == 17
        assert sum(paper_bundle.truth) == 17

    def test_scripted_tables_cover_every_event_and_role(self, paper_bundle):
        for role in ("tda", "tia", "rca", "aa", "single_llm"):
            table = paper_bundle.scripted[role]
            assert {int(k) for k in table} == {r.event_id for r in paper_bundle.dataset.records}

    def test_indicators_loaded(self, paper_bundle):
        assert "10.0.0.57" in paper_bundle.indicators

    def test_reference_event_fields(self, paper_bundle):
        by_id = {r.event_id: r for r in paper_bundle.dataset.records}
        e2 = by_id[2]
        assert (e2.src_ip, e2.dst_ip) == ("192.168.1.199", "10.0.0.57")
        assert e2.dst_port == 18530
        assert e2.protocol.value == "UDP"
        assert e2.bytes_sent == 162548
        assert e2.label.threat_type is ThreatType.DATA_EXFILTRATION

    def test_manifest_confusions(self, paper_bundle):
        assert paper_bundle.manifest["confusion"]["coordinated"] == {
            "tp": 15, "fn": 2, "fp": 3, "tn": 30,
        }
        assert paper_bundle.manifest["confusion"]["single_llm"] == {
            "tp": 10, "fn": 7, "fp": 4, "tn": 29,
        }


class TestIntegrity:
    def _copy_fixture(self, tmp_path, monkeypatch):
        src = fixtures_root() / "paper"
        dst = tmp_path / "fixtures" / "paper"
        shutil.copytree(src, dst)
        monkeypatch.setenv("MALCDF_FIXTURES_DIR", str(tmp_path / "fixtures"))
        return dst

    def test_checksum_tamper_detected(self, tmp_path, monkeypatch):
        dst = self._copy_fixture(tmp_path, monkeypatch)
        stream = dst / "stream.csv"
        stream.write_bytes(stream.read_bytes().replace(b"162548", b"162549", 1))
        with pytest.raises(FixtureCorrupt):
            load_fixture("paper")

    def test_manifest_drift_detected(self, tmp_path, monkeypatch):
        dst = self._copy_fixture(tmp_path, monkeypatch)
        manifest = json.loads((dst / "manifest.json").read_text())
        manifest["confusion"]["coordinated"]["tp"] = 16
        (dst / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(FixtureCorrupt):
            load_fixture("paper")

    def test_missing_fixture(self):
        with pytest.raises(FixtureCorrupt):
            load_fixture("no-such-fixture")
