"""Static risk assessment of the fitness scenario.

The default scenario is a legacy-pairing, Just Works, always-discoverable
sensor with no user authentication and no end-to-end security, which
lights up the whole catalog. Hardening flags remove findings one by one.
"""

import dataclasses

from blelab import harness, risk
from blelab.pairing import PairingMode
from blelab.scenario import ScenarioConfig

config = ScenarioConfig()
facts = harness.scenario_facts(config)
findings = risk.applicable_findings(facts)
print(risk.report_text(findings, facts))

print("After switching to Secure Connections and minimal discoverability:")
hardened = dataclasses.replace(
    config,
    pairing_mode=PairingMode.SECURE_CONNECTIONS,
    always_discoverable=False,
)
facts = harness.scenario_facts(hardened)
for finding in risk.applicable_findings(facts):
    print(f"  still open: n.{finding.id} [{finding.risk.value}] {finding.title}")
