"""The stream-poisoning proof of concept.

A proxy clones the sensor, captures the phone, and rewrites every
heart-rate notification to 255 bpm on its way to the victim. The sensor
itself keeps emitting a calm 70, and the victim's RSSI monitor notices
the attacker anyway.
"""

from blelab import harness
from blelab.gatt import Uuid
from blelab.mitm import Direction, HrOverride, ModificationRule
from blelab.scenario import MitmConfig, ScenarioConfig

config = ScenarioConfig(
    seed=7,
    duration_ms=20_000,
    mitm=MitmConfig(
        enabled=True,
        start_ms=2000,
        rules=(
            ModificationRule(
                Uuid.short(0x2A37), Direction.TO_CENTRAL, HrOverride(255)
            ),
        ),
    ),
)

world = harness.build_world(config)
world.run_to_end()

print("sensor emitted: ", world.peripheral.emitted_bpm)
print("victim decoded: ", [bpm for _, bpm in world.central.bpm_log])

print("\nproxy journal (first five ops):")
for entry in world.attacker.session.journal[:5]:
    record = entry.to_record()
    print(
        f"  t={record['time_ms']:>5} {record['direction']:<12} "
        f"{record['uuid']} {record['before_hex']} -> {record['after_hex']}"
    )

rssi_alerts = [a for a in world.central.alerts if a.kind.value == "RssiIncrease"]
print(f"\nRSSI alerts on the victim: {len(rssi_alerts)}, "
      f"first at t={rssi_alerts[0].time_ms} ms (attack started at 2000 ms)")
