from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malcdf import agents as ag
from malcdf import coordinator as co
from malcdf.agents import IntelEnrichment, RulesProvider, ScriptedProvider, ThreatVerdict
from malcdf.coordinator import (
    RunContext,
    RunMode,
    consensus,
    process_event,
    round_confidence,
    run,
)
from malcdf.events import GroundTruthLabel, NetworkEventRecord, Protocol, StreamConfig
from malcdf.ontology import Severity, ThreatType
from malcdf.scl import AuditOutcome, SecureChannelLayer


def _verdict(is_attack=True, ttype=ThreatType.DATA_EXFILTRATION,
             severity=Severity.MEDIUM, confidence=0.70):
    return ThreatVerdict(is_attack, ttype, severity, confidence,
                         "udp port 18530, 162548 bytes", co.AgentId.TDA)


def _benign_verdict(confidence=0.70):
    return ThreatVerdict(False, ThreatType.BENIGN, Severity.LOW, confidence,
                         "tcp port 443 nominal", co.AgentId.TDA)


def _enrichment(agrees=True, confidence=0.70, revised=None):
    return IntelEnrichment(agrees, confidence, "notes", (), revised)


class TestRoundConfidence:
    @pytest.mark.parametrize("value,expected", [
        (0.70, 0.70),
        (0.705, 0.71),   # half rounds up
        (0.125, 0.13),
        (0.7849999, 0.78),
        (0.0, 0.0),
        (1.0, 1.0),
    ])
    def test_examples(self, value, expected):
        assert round_confidence(value) == expected

    @settings(max_examples=300, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    def test_matches_decimal_oracle(self, value):
        from decimal import ROUND_HALF_UP

        oracle = float(Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))
        assert round_confidence(value) == oracle


class TestConsensus:
    def test_agreement_keeps_detection_and_averages(self):
        out = consensus(_verdict(confidence=0.72), _enrichment(confidence=0.68))
        assert out.final_is_attack is True
        assert out.final_type is ThreatType.DATA_EXFILTRATION
        assert out.final_severity is Severity.MEDIUM
        assert out.final_confidence == 0.70

    def test_fixture_mean_exact(self):
        out = consensus(_verdict(confidence=0.70), _enrichment(confidence=0.70))
        assert out.final_confidence == 0.70

    def test_type_refinement_adopts_intelligence_type(self):
        out = consensus(
            _verdict(confidence=0.55),
            _enrichment(agrees=False, confidence=0.80, revised=ThreatType.MALWARE_BEACONING),
        )
        assert out.final_is_attack is True
        assert out.final_type is ThreatType.MALWARE_BEACONING
        assert out.final_confidence == round_confidence((0.55 + 0.80) / 2)

    def test_disagreement_higher_confidence_wins_flip_to_benign(self):
        out = consensus(
            _verdict(confidence=0.55),
            _enrichment(agrees=False, confidence=0.90, revised=ThreatType.BENIGN),
        )
        assert out.final_is_attack is False
        assert out.final_type is ThreatType.BENIGN
        assert out.final_severity is Severity.LOW  # flip forces LOW

    def test_disagreement_tie_goes_to_detection(self):
        out = consensus(
            _verdict(confidence=0.60),
            _enrichment(agrees=False, confidence=0.60, revised=ThreatType.BENIGN),
        )
        assert out.final_is_attack is True
        assert out.final_type is ThreatType.DATA_EXFILTRATION

    def test_benign_detection_overturned_by_confident_intel(self):
        out = consensus(
            _benign_verdict(confidence=0.50),
            _enrichment(agrees=False, confidence=0.85, revised=ThreatType.BRUTE_FORCE),
        )
        assert out.final_is_attack is True
        assert out.final_type is ThreatType.BRUTE_FORCE

    @settings(max_examples=200, deadline=None)
    @given(
        tda_conf=st.decimals(min_value="0", max_value="1", places=2),
        tia_conf=st.decimals(min_value="0", max_value="1", places=2),
        agrees=st.booleans(),
    )
    def test_confidence_is_always_two_decimal_half_up_mean(self, tda_conf, tia_conf, agrees):
        from decimal import ROUND_HALF_UP

        out = consensus(
            _verdict(confidence=float(tda_conf)),
            _enrichment(agrees=agrees, confidence=float(tia_conf)),
        )
        expected = float(
            ((tda_conf + tia_conf) / 2).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
        )
        assert out.final_confidence == expected

    @settings(max_examples=100, deadline=None)
    @given(
        tda_conf=st.decimals(min_value="0", max_value="1", places=2),
        tia_conf=st.decimals(min_value="0", max_value="1", places=2),
        tda_attack=st.booleans(),
        revised=st.sampled_from([None, ThreatType.BENIGN, ThreatType.DDOS]),
    )
    def test_disagreement_resolution_invariant(self, tda_conf, tia_conf, tda_attack, revised):
        tda = _verdict(confidence=float(tda_conf)) if tda_attack \
            else _benign_verdict(confidence=float(tda_conf))
        out = consensus(tda, _enrichment(agrees=False, confidence=float(tia_conf),
                                         revised=revised))
        tia_attack = revised is not None and revised is not ThreatType.BENIGN
        if tia_attack == tda_attack:
            assert out.final_is_attack == tda_attack
        elif tia_conf > tda_conf:
            assert out.final_is_attack == tia_attack
        else:
            assert out.final_is_attack == tda_attack
        if not out.final_is_attack:
            assert out.final_severity is Severity.LOW


def _attack_record(event_id=2):
    return NetworkEventRecord(
        event_id=event_id, src_ip="192.168.1.199", dst_ip="10.0.0.57", dst_port=18530,
        protocol=Protocol.UDP, bytes_sent=162548, packets=140, duration_ms=8200,
        label=GroundTruthLabel(True, ThreatType.DATA_EXFILTRATION),
    )


class TestProcessEvent:
    def test_full_pipeline_over_rules(self):
        scl = SecureChannelLayer()
        result = process_event(_attack_record(), RunContext(scl=scl, provider=RulesProvider()))
        assert result.completed
        assert result.consensus is not None and result.consensus.final_is_attack
        assert result.report is not None and result.report.technique.technique_id == "T1041"
        assert result.latency_ms > 0
        assert result.scl_time_ms >= 0

    def test_audit_trail_order(self):
        scl = SecureChannelLayer()
        result = process_event(_attack_record(), RunContext(scl=scl, provider=RulesProvider()))
        entries = [scl.audit.read()[i] for i in result.audit_indices]
        assert [(e.sender, e.recipient) for e in entries] == [
            ("TDA", "TIA"), ("TIA", "RCA"), ("RCA", "AA"), ("AA", "COORDINATOR"),
        ]
        assert all(e.outcome is AuditOutcome.DELIVERED for e in entries)

    def test_stage_failure_recorded_not_raised(self):
        scl = SecureChannelLayer()
        result = process_event(
            _attack_record(), RunContext(scl=scl, provider=ScriptedProvider({"tda": {}}))
        )
        assert not result.completed
        assert result.error
        assert result.consensus is None


class TestRun:
    def test_simulation_mode(self):
        summary = run(
            StreamConfig(total_records=10, attack_records=3, seed=5),
            RunMode.SIMULATION,
            RulesProvider(),
        )
        assert len(summary.results) == 10
        assert all(r.completed for r in summary.results)

    def test_simulation_requires_stream_config(self):
        from malcdf.events import Dataset, DatasetSource

        ds = Dataset.from_records([_attack_record()], DatasetSource.UPLOAD)
        with pytest.raises(Exception) as exc:
            run(ds, RunMode.SIMULATION, RulesProvider())
        assert getattr(exc.value, "code", None) == "RUN_CONFIG_INVALID"

    def test_per_event_failure_does_not_abort(self, paper_bundle):
        # Script only event 1; everything else fails at the TDA stage.
        table = {"tda": {1: paper_bundle.scripted["tda"]["1"]}}
        summary = run(paper_bundle.dataset, RunMode.DATASET, ScriptedProvider(table))
        assert len(summary.results) == len(paper_bundle.dataset.records)
        assert sum(1 for r in summary.results if not r.completed) >= 1

    def test_on_result_callback_sees_every_event(self):
        seen = []
        run(
            StreamConfig(total_records=5, attack_records=2, seed=1),
            RunMode.SIMULATION,
            RulesProvider(),
            on_result=seen.append,
        )
        assert [r.event_id for r in seen] == [1, 2, 3, 4, 5]
