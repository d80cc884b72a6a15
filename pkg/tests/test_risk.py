"""Risk engine tests: the likelihood x impact matrix, the built-in
vulnerability catalog, applicability rules, and report rendering."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from blelab.pairing import JUST_WORKS, PASSKEY, PairingMode
from blelab.risk import (
    Impact,
    Likelihood,
    Risk,
    ScenarioFacts,
    VulnerabilityFinding,
    applicable_findings,
    builtin_catalog,
    rate,
    report_json,
    report_text,
)

_RANK = {
    Risk.NOTE: 0, Risk.LOW: 1, Risk.MEDIUM: 2, Risk.HIGH: 3, Risk.CRITICAL: 4,
}
_L_RANK = {Likelihood.LOW: 0, Likelihood.MEDIUM: 1, Likelihood.HIGH: 2}
_I_RANK = {Impact.LOW: 0, Impact.MEDIUM: 1, Impact.HIGH: 2}


class TestRate:
    CELLS = [
        (Likelihood.LOW, Impact.LOW, Risk.NOTE),
        (Likelihood.MEDIUM, Impact.LOW, Risk.LOW),
        (Likelihood.HIGH, Impact.LOW, Risk.MEDIUM),
        (Likelihood.LOW, Impact.MEDIUM, Risk.LOW),
        (Likelihood.MEDIUM, Impact.MEDIUM, Risk.MEDIUM),
        (Likelihood.HIGH, Impact.MEDIUM, Risk.HIGH),
        (Likelihood.LOW, Impact.HIGH, Risk.MEDIUM),
        (Likelihood.MEDIUM, Impact.HIGH, Risk.HIGH),
        (Likelihood.HIGH, Impact.HIGH, Risk.CRITICAL),
    ]

    @pytest.mark.parametrize("likelihood,impact,expected", CELLS)
    def test_full_matrix(self, likelihood, impact, expected):
        assert rate(likelihood, impact) is expected

    @given(
        l1=st.sampled_from(list(Likelihood)),
        l2=st.sampled_from(list(Likelihood)),
        impact=st.sampled_from(list(Impact)),
    )
    def test_monotone_in_likelihood(self, l1, l2, impact):
        if _L_RANK[l1] <= _L_RANK[l2]:
            assert _RANK[rate(l1, impact)] <= _RANK[rate(l2, impact)]

    @given(
        likelihood=st.sampled_from(list(Likelihood)),
        i1=st.sampled_from(list(Impact)),
        i2=st.sampled_from(list(Impact)),
    )
    def test_monotone_in_impact(self, likelihood, i1, i2):
        if _I_RANK[i1] <= _I_RANK[i2]:
            assert _RANK[rate(likelihood, i1)] <= _RANK[rate(likelihood, i2)]


class TestCatalog:
    def test_five_findings_with_expected_risks(self):
        catalog = builtin_catalog()
        assert [f.id for f in catalog] == [1, 2, 3, 4, 5]
        assert [f.risk for f in catalog] == [
            Risk.CRITICAL, Risk.CRITICAL, Risk.HIGH, Risk.MEDIUM, Risk.HIGH,
        ]

    def test_titles(self):
        titles = [f.title for f in builtin_catalog()]
        assert titles == [
            "Low energy legacy pairing provides no passive eavesdropping protection.",
            "The Just Works pairing method provides no MITM protection.",
            "No user authentication exists.",
            "End-to-end security is not performed.",
            "Discoverable and/or connectable devices are prone to attack.",
        ]

    def test_stored_risk_agrees_with_matrix(self):
        for finding in builtin_catalog():
            assert finding.risk is rate(finding.likelihood, finding.impact)

    def test_inconsistent_finding_rejected(self):
        with pytest.raises(ValueError):
            VulnerabilityFinding(
                id=1, title="x", likelihood=Likelihood.LOW, impact=Impact.LOW,
                risk=Risk.CRITICAL, threat_events="", description="", mitigation="",
            )

    def test_id_bounds(self):
        with pytest.raises(ValueError):
            VulnerabilityFinding(
                id=6, title="x", likelihood=Likelihood.LOW, impact=Impact.LOW,
                risk=Risk.NOTE, threat_events="", description="", mitigation="",
            )


def worst_case_facts():
    return ScenarioFacts(
        pairing_mode=PairingMode.LEGACY_LE,
        association_method=JUST_WORKS,
        always_discoverable=True,
        user_auth_present=False,
        end_to_end_security=False,
    )


class TestApplicability:
    def test_worst_case_selects_all_five(self):
        findings = applicable_findings(worst_case_facts())
        assert [f.id for f in findings] == [1, 2, 3, 4, 5]

    def test_secure_connections_drops_finding_one(self):
        facts = ScenarioFacts(
            pairing_mode=PairingMode.SECURE_CONNECTIONS,
            association_method=JUST_WORKS,
        )
        assert 1 not in {f.id for f in applicable_findings(facts)}

    def test_passkey_drops_finding_two(self):
        facts = ScenarioFacts(
            pairing_mode=PairingMode.LEGACY_LE, association_method=PASSKEY
        )
        assert 2 not in {f.id for f in applicable_findings(facts)}

    def test_hardened_scenario_has_no_findings(self):
        facts = ScenarioFacts(
            pairing_mode=PairingMode.SECURE_CONNECTIONS,
            association_method=PASSKEY,
            always_discoverable=False,
            user_auth_present=True,
            end_to_end_security=True,
        )
        assert applicable_findings(facts) == []

    @given(
        discoverable=st.booleans(),
        user_auth=st.booleans(),
        e2e=st.booleans(),
    )
    def test_flag_driven_findings(self, discoverable, user_auth, e2e):
        facts = ScenarioFacts(
            pairing_mode=PairingMode.LEGACY_LE,
            association_method=JUST_WORKS,
            always_discoverable=discoverable,
            user_auth_present=user_auth,
            end_to_end_security=e2e,
        )
        ids = {f.id for f in applicable_findings(facts)}
        assert (3 in ids) == (not user_auth)
        assert (4 in ids) == (not e2e)
        assert (5 in ids) == discoverable


class TestReports:
    def test_json_report_round_trips(self):
        facts = worst_case_facts()
        findings = applicable_findings(facts)
        doc = json.loads(report_json(findings, facts))
        assert doc["scenario"]["pairing_mode"] == "LegacyLE"
        assert doc["scenario"]["association_method"] == "JustWorks"
        assert len(doc["findings"]) == 5
        assert doc["findings"][0]["risk"] == "Critical"
        assert {"id", "title", "likelihood", "impact", "risk", "threat_events",
                "description", "mitigation"} <= set(doc["findings"][0])

    def test_text_report_contains_every_finding(self):
        facts = worst_case_facts()
        findings = applicable_findings(facts)
        text = report_text(findings, facts)
        for finding in findings:
            assert f"Vulnerability n.{finding.id}" in text
            assert finding.title in text
            assert finding.mitigation in text

    def test_text_report_empty_case(self):
        facts = ScenarioFacts(
            pairing_mode=PairingMode.SECURE_CONNECTIONS,
            association_method=PASSKEY,
            always_discoverable=False,
            user_auth_present=True,
            end_to_end_security=True,
        )
        assert "No applicable findings." in report_text([], facts)

    def test_rendering_is_deterministic(self):
        facts = worst_case_facts()
        findings = applicable_findings(facts)
        assert report_json(findings, facts) == report_json(findings, facts)
        assert report_text(findings, facts) == report_text(findings, facts)
