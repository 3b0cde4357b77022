import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malcdf import events as ev
from malcdf.errors import BadConfig, BadValue, MalformedCsv, MissingColumn
from malcdf.events import (
    Dataset,
    DatasetSource,
    GroundTruthLabel,
    NetworkEventRecord,
    Protocol,
    StreamConfig,
    generate_dataset,
    parse_dataset,
    serialize_dataset,
)
from malcdf.ontology import ThreatType


def _record(event_id=1, **overrides):
    base = dict(
        event_id=event_id,
        src_ip="192.168.1.10",
        dst_ip="10.0.0.57",
        dst_port=443,
        protocol=Protocol.TCP,
        bytes_sent=1200,
        packets=10,
        duration_ms=500,
        extra_features=(("flow_iat_mean", 3.5),),
        label=GroundTruthLabel(False, None),
    )
    base.update(overrides)
    return NetworkEventRecord(**base)


class TestRecordValidation:
    def test_valid_record(self):
        assert _record().dst_port == 443

    @pytest.mark.parametrize("field,value", [
        ("dst_port", -1),
        ("dst_port", 65536),
        ("bytes_sent", -1),
        ("packets", -2),
        ("duration_ms", -5),
    ])
    def test_rejects_bad_field(self, field, value):
        with pytest.raises(BadValue):
            _record(**{field: value})

    def test_benign_label_cannot_carry_type(self):
        with pytest.raises(BadValue):
            GroundTruthLabel(False, ThreatType.DDOS)

    def test_frozen(self):
        r = _record()
        with pytest.raises(Exception):
            r.dst_port = 80  # type: ignore[misc]


class TestDataset:
    def test_duplicate_event_ids_rejected(self):
        with pytest.raises(BadValue):
            Dataset.from_records([_record(1), _record(1)], DatasetSource.UPLOAD)

    def test_empty_rejected(self):
        with pytest.raises(BadValue):
            Dataset.from_records([], DatasetSource.UPLOAD)

    def test_inconsistent_feature_schema_rejected(self):
        with pytest.raises(BadValue):
            Dataset.from_records(
                [_record(1), _record(2, extra_features=(("other", 1.0),))],
                DatasetSource.UPLOAD,
            )

    def test_attack_count(self):
        ds = Dataset.from_records(
            [_record(1), _record(2, label=GroundTruthLabel(True, ThreatType.DDOS))],
            DatasetSource.UPLOAD,
        )
        assert ds.attack_count == 1


class TestCsvRoundTrip:
    def test_round_trip_exact(self):
        ds = generate_dataset(StreamConfig(total_records=30, attack_records=10, seed=7))
        again = parse_dataset(serialize_dataset(ds))
        assert again.records == ds.records
        assert again.schema_fingerprint == ds.schema_fingerprint

    def test_column_aliases(self):
        text = (
            "id,source ip,destination ip,destination port,proto,"
            "total bytes,packet count,flow duration,label\n"
            "1,192.168.1.10,10.0.0.57,443,tcp,1200,10,500,benign\n"
        )
        ds = parse_dataset(text.encode("utf-8"))
        r = ds.records[0]
        assert r.protocol is Protocol.TCP
        assert r.bytes_sent == 1200
        assert r.label is not None and r.label.is_attack is False

    def test_missing_column(self):
        text = "event_id,src_ip\n1,1.2.3.4\n"
        with pytest.raises(MissingColumn):
            parse_dataset(text.encode("utf-8"))

    def test_ragged_row(self):
        ds = generate_dataset(StreamConfig(total_records=3, attack_records=1, seed=1))
        lines = serialize_dataset(ds).decode("utf-8").splitlines()
        lines[1] = lines[1].rsplit(",", 1)[0]
        with pytest.raises(MalformedCsv):
            parse_dataset(("\n".join(lines) + "\n").encode("utf-8"))

    def test_non_utf8_rejected(self):
        with pytest.raises(MalformedCsv):
            parse_dataset(b"\xff\xfe\x00bad")

    def test_no_data_rows_rejected(self):
        header = "event_id,src_ip,dst_ip,dst_port,protocol,bytes_sent\n"
        with pytest.raises(MalformedCsv):
            parse_dataset(header.encode("utf-8"))

    def test_non_numeric_port_rejected(self):
        text = (
            "event_id,src_ip,dst_ip,dst_port,protocol,bytes_sent\n"
            "1,1.2.3.4,5.6.7.8,https,TCP,100\n"
        )
        with pytest.raises(MalformedCsv):
            parse_dataset(text.encode("utf-8"))

    def test_unrecognized_attack_label_kept_without_type(self):
        text = (
            "event_id,src_ip,dst_ip,dst_port,protocol,bytes_sent,label\n"
            "1,1.2.3.4,5.6.7.8,80,TCP,100,mystery-threat\n"
        )
        label = parse_dataset(text.encode("utf-8")).records[0].label
        assert label is not None
        assert label.is_attack is True and label.threat_type is None

    def test_extra_numeric_columns_preserved_in_order(self):
        text = (
            "event_id,src_ip,dst_ip,dst_port,protocol,bytes_sent,b_col,a_col\n"
            "1,1.2.3.4,5.6.7.8,80,TCP,100,3.5,1.25\n"
        )
        r = parse_dataset(text.encode("utf-8")).records[0]
        assert r.extra_features == (("b_col", 3.5), ("a_col", 1.25))

    def test_unknown_protocol_becomes_other(self):
        text = (
            "event_id,src_ip,dst_ip,dst_port,protocol,bytes_sent\n"
            "1,1.2.3.4,5.6.7.8,80,GRE,100\n"
        )
        assert parse_dataset(text.encode("utf-8")).records[0].protocol is Protocol.OTHER


class TestGenerator:
    def test_determinism(self):
        cfg = StreamConfig(total_records=50, attack_records=17, seed=42)
        assert generate_dataset(cfg).records == generate_dataset(cfg).records

    def test_attack_count_exact(self):
        ds = generate_dataset(StreamConfig(total_records=50, attack_records=17, seed=42))
        assert ds.attack_count == 17

    def test_different_seed_differs(self):
        a = generate_dataset(StreamConfig(total_records=50, attack_records=17, seed=1))
        b = generate_dataset(StreamConfig(total_records=50, attack_records=17, seed=2))
        assert a.records != b.records

    @pytest.mark.parametrize("cfg", [
        StreamConfig(total_records=0, attack_records=0, seed=0),
        StreamConfig(total_records=5, attack_records=10, seed=0),
        StreamConfig(total_records=5, attack_records=-1, seed=0),
        StreamConfig(total_records=5, attack_records=1, seed=0, inter_event_delay_ms=-1),
        StreamConfig(total_records=5, attack_records=1, seed=0,
                     threat_mix={ThreatType.DDOS: -0.5}),
        StreamConfig(total_records=5, attack_records=1, seed=0,
                     threat_mix={ThreatType.BENIGN: 1.0}),
    ])
    def test_invalid_config(self, cfg):
        with pytest.raises(BadConfig):
            cfg.validate()

    @settings(max_examples=25, deadline=None)
    @given(
        n=st.integers(min_value=1, max_value=80),
        seed=st.integers(min_value=0, max_value=2**31 - 1),
        data=st.data(),
    )
    def test_generated_streams_round_trip(self, n, seed, data):
        k = data.draw(st.integers(min_value=0, max_value=n))
        ds = generate_dataset(StreamConfig(total_records=n, attack_records=k, seed=seed))
        assert ds.attack_count == k
        assert parse_dataset(serialize_dataset(ds)).records == ds.records

    def test_attack_records_carry_a_type(self):
        ds = generate_dataset(StreamConfig(total_records=40, attack_records=12, seed=9))
        for r in ds.records:
            if r.label and r.label.is_attack:
                assert r.label.threat_type is not None
                assert r.label.threat_type is not ThreatType.BENIGN


class TestNormalization:
    def test_zero_range_feature_maps_to_zero(self):
        ds = Dataset.from_records([_record(1), _record(2)], DatasetSource.UPLOAD)
        stats = ev.feature_stats(ds)
        normed = ev.normalize_record(ds.records[0], stats)
        assert dict(normed.extra_features)["flow_iat_mean"] == 0.0

    def test_min_max_bounds(self):
        ds = generate_dataset(StreamConfig(total_records=30, attack_records=10, seed=3))
        stats = ev.feature_stats(ds)
        for r in ds.records:
            normed = ev.normalize_record(r, stats)
            assert all(0.0 <= v <= 1.0 for _, v in normed.extra_features)

    def test_unknown_feature_rejected(self):
        r = _record()
        with pytest.raises(Exception) as exc:
            ev.normalize_record(r, {})
        assert getattr(exc.value, "code", None) == "UNKNOWN_FEATURE"
