"""OWASP-style likelihood x impact risk rating and the built-in BLE 4.1
vulnerability catalog, rendered as JSON and plain-text assessment reports."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .pairing import AssociationMethod, Method, PairingMode


class Likelihood(enum.Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


class Impact(enum.Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


class Risk(enum.Enum):
    NOTE = "Note"
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"
    CRITICAL = "Critical"


# Overall risk matrix, indexed [impact][likelihood].
_MATRIX: dict[Impact, dict[Likelihood, Risk]] = {
    Impact.LOW: {
        Likelihood.LOW: Risk.NOTE,
        Likelihood.MEDIUM: Risk.LOW,
        Likelihood.HIGH: Risk.MEDIUM,
    },
    Impact.MEDIUM: {
        Likelihood.LOW: Risk.LOW,
        Likelihood.MEDIUM: Risk.MEDIUM,
        Likelihood.HIGH: Risk.HIGH,
    },
    Impact.HIGH: {
        Likelihood.LOW: Risk.MEDIUM,
        Likelihood.MEDIUM: Risk.HIGH,
        Likelihood.HIGH: Risk.CRITICAL,
    },
}


def rate(likelihood: Likelihood, impact: Impact) -> Risk:
    return _MATRIX[impact][likelihood]


@dataclass(frozen=True)
class VulnerabilityFinding:
    id: int
    title: str
    likelihood: Likelihood
    impact: Impact
    risk: Risk
    threat_events: str
    description: str
    mitigation: str

    def __post_init__(self) -> None:
        if not 1 <= self.id <= 5:
            raise ValueError("finding id must be 1..5")
        if self.risk is not rate(self.likelihood, self.impact):
            raise ValueError(f"finding {self.id}: stored risk disagrees with the rating matrix")


def builtin_catalog() -> list[VulnerabilityFinding]:
    return [
        VulnerabilityFinding(
            id=1,
            title="Low energy legacy pairing provides no passive eavesdropping protection.",
            likelihood=Likelihood.HIGH,
            impact=Impact.HIGH,
            risk=Risk.CRITICAL,
            threat_events="Passive Eavesdropping",
            description=(
                "Eavesdroppers can capture secret keys (i.e., LTK) distributed "
                "during low energy pairing."
            ),
            mitigation=(
                "BLE devices should be paired by using an algorithm that provides "
                "a mechanism to exchange keys over an unsecured channel. For "
                "instance the ECDH."
            ),
        ),
        VulnerabilityFinding(
            id=2,
            title="The Just Works pairing method provides no MITM protection.",
            likelihood=Likelihood.HIGH,
            impact=Impact.HIGH,
            risk=Risk.CRITICAL,
            threat_events="MitM attack",
            description=(
                "MITM attackers can capture and manipulate data transmitted "
                "between trusted devices."
            ),
            mitigation=(
                "Low energy devices should be paired in a secure environment to "
                "minimize the risk of eavesdropping and MITM attacks. Just Works "
                "pairing should not be used for low energy."
            ),
        ),
        VulnerabilityFinding(
            id=3,
            title="No user authentication exists.",
            likelihood=Likelihood.MEDIUM,
            impact=Impact.HIGH,
            risk=Risk.HIGH,
            threat_events="Pairing Eavesdropping",
            description="Only device authentication is provided by the specification.",
            mitigation=(
                "Application-level security, including user authentication, can "
                "be added via overlay by the application developer."
            ),
        ),
        VulnerabilityFinding(
            id=4,
            title="End-to-end security is not performed.",
            likelihood=Likelihood.MEDIUM,
            impact=Impact.MEDIUM,
            risk=Risk.MEDIUM,
            threat_events="MitM attack",
            description=(
                "Only individual links are encrypted and authenticated. Data is "
                "decrypted at intermediate points."
            ),
            mitigation=(
                "End-to-end security on top of the Bluetooth stack can be "
                "provided by use of additional security controls."
            ),
        ),
        VulnerabilityFinding(
            id=5,
            title="Discoverable and/or connectable devices are prone to attack.",
            likelihood=Likelihood.MEDIUM,
            impact=Impact.HIGH,
            risk=Risk.HIGH,
            threat_events="Passive Eavesdropping, MitM attack",
            description=(
                "A hacker can try to take over any discoverable and/or "
                "connectable BLE device, and then he can get access to all the "
                "information."
            ),
            mitigation=(
                "Any device that must go into discoverable or connectable mode "
                "to pair or connect should only do so for a minimal amount of "
                "time. A device should not be in discoverable or connectable "
                "mode all the time."
            ),
        ),
    ]


@dataclass(frozen=True)
class ScenarioFacts:
    pairing_mode: PairingMode
    association_method: AssociationMethod
    always_discoverable: bool = True
    user_auth_present: bool = False
    end_to_end_security: bool = False


def applicable_findings(facts: ScenarioFacts) -> list[VulnerabilityFinding]:
    catalog = {f.id: f for f in builtin_catalog()}
    selected = []
    if facts.pairing_mode is PairingMode.LEGACY_LE:
        selected.append(catalog[1])
    if facts.association_method.method is Method.JUST_WORKS:
        selected.append(catalog[2])
    if not facts.user_auth_present:
        selected.append(catalog[3])
    if not facts.end_to_end_security:
        selected.append(catalog[4])
    if facts.always_discoverable:
        selected.append(catalog[5])
    return selected


def report_json(findings: list[VulnerabilityFinding], facts: ScenarioFacts) -> str:
    doc = {
        "scenario": {
            "pairing_mode": facts.pairing_mode.value,
            "association_method": facts.association_method.method.value,
            "authenticated": facts.association_method.authenticated,
            "always_discoverable": facts.always_discoverable,
            "user_auth_present": facts.user_auth_present,
            "end_to_end_security": facts.end_to_end_security,
        },
        "findings": [
            {
                "id": f.id,
                "title": f.title,
                "likelihood": f.likelihood.value,
                "impact": f.impact.value,
                "risk": f.risk.value,
                "threat_events": f.threat_events,
                "description": f.description,
                "mitigation": f.mitigation,
            }
            for f in findings
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def report_text(findings: list[VulnerabilityFinding], facts: ScenarioFacts) -> str:
    lines = [
        "BLE scenario risk assessment",
        f"Pairing: {facts.pairing_mode.value} / {facts.association_method.method.value}",
        "",
    ]
    if not findings:
        lines.append("No applicable findings.")
        return "\n".join(lines) + "\n"
    for f in findings:
        rows = [
            ("Vulnerability", f.title),
            ("Likelihood", f.likelihood.value),
            ("Technical Impact", f.impact.value),
            ("Risk", f.risk.value),
            ("Threat Event", f.threat_events),
            ("Description", f.description),
            ("Mitigation", f.mitigation),
        ]
        width = max(len(label) for label, _ in rows)
        lines.append(f"Vulnerability n.{f.id}")
        lines.append("-" * 72)
        for label, text in rows:
            lines.append(f"{label.ljust(width)} | {text}")
        lines.append("")
    return "\n".join(lines) + "\n"
