"""Passive eavesdropping against BLE pairing, three ways.

A sniffer that captures the pairing exchange sees the randoms and confirm
values but never the temporary key. How much that helps depends entirely
on the association method.
"""

import random

from blelab.pairing import (
    IoCapability,
    PairingMode,
    eavesdrop_recover,
    run_pairing,
)


def banner(text):
    print(f"\n=== {text} ===")


# A chest strap has no keyboard and no display, so pairing with a phone
# falls back to Just Works: TK = 0, and the sniffer knows it.
banner("Legacy LE / Just Works (heart-rate sensor vs phone)")
keys, _, transcript = run_pairing(
    IoCapability.KEYBOARD_DISPLAY,
    IoCapability.NO_INPUT_NO_OUTPUT,
    PairingMode.LEGACY_LE,
    random.Random(2024),
)
print("method:        ", transcript.method.method.value)
print("victim STK:    ", keys.session_key.hex())
recovered = eavesdrop_recover(transcript)
print("recovered STK: ", recovered.hex())
assert recovered == keys.session_key

# A six-digit passkey only stretches the attack to at most a million AES
# blocks against the sniffed confirm value.
banner("Legacy LE / Passkey 030579 (brute force)")
keys, _, transcript = run_pairing(
    IoCapability.KEYBOARD_DISPLAY,
    IoCapability.DISPLAY_ONLY,
    PairingMode.LEGACY_LE,
    random.Random(2024),
    initiator_passkey=30579,
    responder_passkey=30579,
)
recovered = eavesdrop_recover(transcript)
print("recovered STK: ", recovered.hex())
assert recovered == keys.session_key

# Secure Connections does an authenticated key agreement; the transcript's
# public values do not determine the LTK and recovery fails.
banner("Secure Connections")
keys, _, transcript = run_pairing(
    IoCapability.KEYBOARD_DISPLAY,
    IoCapability.NO_INPUT_NO_OUTPUT,
    PairingMode.SECURE_CONNECTIONS,
    random.Random(2024),
)
print("victim LTK:    ", keys.session_key.hex())
print("recovered:     ", eavesdrop_recover(transcript))
