"""Deterministic BLE security lab.

A virtual wireless body-area network: a heart-rate peripheral talking to a
mobile-app central over a simulated radio, with an active man-in-the-middle
proxy, legacy-pairing key recovery, RSSI/RTT anomaly detection and an
OWASP-style risk rating engine on top.
"""

__version__ = "0.1.0"
