"""Pairing state machine: association-method selection, TK/STK derivation,
link encryption, and the passive-eavesdropper key recovery attack."""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass
from typing import Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESCCM

KEY_BYTES = 16
PASSKEY_MAX = 999_999


class PairingError(Exception):
    pass


class PasskeyOutOfRange(PairingError):
    pass


class ConfirmMismatch(PairingError):
    pass


class ModeViolation(PairingError):
    pass


class AuthFailure(PairingError):
    pass


class IoCapability(enum.Enum):
    DISPLAY_ONLY = "DisplayOnly"
    DISPLAY_YES_NO = "DisplayYesNo"
    KEYBOARD_ONLY = "KeyboardOnly"
    NO_INPUT_NO_OUTPUT = "NoInputNoOutput"
    KEYBOARD_DISPLAY = "KeyboardDisplay"


class Method(enum.Enum):
    JUST_WORKS = "JustWorks"
    PASSKEY = "Passkey"
    OOB = "OOB"


class PairingMode(enum.Enum):
    LEGACY_LE = "LegacyLE"
    SECURE_CONNECTIONS = "SecureConnections"


@dataclass(frozen=True)
class AssociationMethod:
    method: Method
    authenticated: bool

    def __post_init__(self) -> None:
        if self.method is Method.JUST_WORKS and self.authenticated:
            raise ValueError("Just Works is never authenticated")


JUST_WORKS = AssociationMethod(Method.JUST_WORKS, authenticated=False)
PASSKEY = AssociationMethod(Method.PASSKEY, authenticated=True)
OOB = AssociationMethod(Method.OOB, authenticated=True)

_D = IoCapability.DISPLAY_ONLY
_Y = IoCapability.DISPLAY_YES_NO
_K = IoCapability.KEYBOARD_ONLY
_N = IoCapability.NO_INPUT_NO_OUTPUT
_KD = IoCapability.KEYBOARD_DISPLAY

# Legacy-pairing capability matrix, indexed [responder][initiator].
# Numeric comparison does not exist pre-4.2, so DisplayYesNo pairs fall
# back to Just Works unless one side can enter a passkey.
_MATRIX: dict[IoCapability, dict[IoCapability, AssociationMethod]] = {
    _D: {_D: JUST_WORKS, _Y: JUST_WORKS, _K: PASSKEY, _N: JUST_WORKS, _KD: PASSKEY},
    _Y: {_D: JUST_WORKS, _Y: JUST_WORKS, _K: PASSKEY, _N: JUST_WORKS, _KD: PASSKEY},
    _K: {_D: PASSKEY, _Y: PASSKEY, _K: PASSKEY, _N: JUST_WORKS, _KD: PASSKEY},
    _N: {cap: JUST_WORKS for cap in IoCapability},
    _KD: {_D: PASSKEY, _Y: PASSKEY, _K: PASSKEY, _N: JUST_WORKS, _KD: PASSKEY},
}


def select_association(
    initiator: IoCapability, responder: IoCapability, oob_available: bool = False
) -> AssociationMethod:
    if oob_available:
        return OOB
    return _MATRIX[responder][initiator]


def derive_tk(
    method: AssociationMethod,
    user_input: Optional[int] = None,
    rng: Optional[random.Random] = None,
) -> bytes:
    """128-bit temporary key: zeros for Just Works, the six-digit passkey
    embedded in the low bits for Passkey, fresh random bits for OOB."""
    if method.method is Method.JUST_WORKS:
        return bytes(KEY_BYTES)
    if method.method is Method.PASSKEY:
        if user_input is None or not 0 <= user_input <= PASSKEY_MAX:
            raise PasskeyOutOfRange(f"passkey must be in [0, {PASSKEY_MAX}], got {user_input}")
        return user_input.to_bytes(KEY_BYTES, "big")
    if rng is None:
        rng = random.Random()
    return rng.getrandbits(128).to_bytes(KEY_BYTES, "big")


def _aes_ecb(key: bytes, block: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def confirm_value(tk: bytes, rand: bytes) -> bytes:
    """Keyed 128-bit PRF of the pairing random: one AES-128 block under TK.

    Composition: confirm = AES-ECB(tk, rand). A simplified stand-in for the
    core-protocol confirm function with the same key-recovery surface.
    """
    return _aes_ecb(tk, rand)


def derive_stk(tk: bytes, m_rand: bytes, s_rand: bytes) -> bytes:
    """Short-term key from TK and both pairing randoms.

    Composition: stk = AES-ECB(tk, m_rand[8:] || s_rand[8:]).
    """
    return _aes_ecb(tk, m_rand[8:] + s_rand[8:])


@dataclass(frozen=True)
class KeyMaterial:
    tk: bytes
    stk: Optional[bytes] = None
    ltk: Optional[bytes] = None

    @property
    def session_key(self) -> bytes:
        key = self.stk if self.stk is not None else self.ltk
        assert key is not None
        return key


@dataclass(frozen=True)
class PairingTranscript:
    """Everything an on-air sniffer sees during pairing, and nothing else."""

    m_rand: bytes
    s_rand: bytes
    m_confirm: bytes
    s_confirm: bytes
    mode: PairingMode
    method: AssociationMethod
    public_values: Optional[tuple[bytes, bytes]] = None

    def to_json(self) -> str:
        doc = {
            "mRand": self.m_rand.hex(),
            "sRand": self.s_rand.hex(),
            "mConfirm": self.m_confirm.hex(),
            "sConfirm": self.s_confirm.hex(),
            "mode": self.mode.value,
            "method": self.method.method.value,
        }
        if self.public_values is not None:
            doc["publicValues"] = [v.hex() for v in self.public_values]
        return json.dumps(doc, sort_keys=True)


def run_pairing(
    initiator_io: IoCapability,
    responder_io: IoCapability,
    mode: PairingMode,
    rng: random.Random,
    method: Optional[AssociationMethod] = None,
    initiator_passkey: Optional[int] = None,
    responder_passkey: Optional[int] = None,
    oob_available: bool = False,
) -> tuple[KeyMaterial, KeyMaterial, PairingTranscript]:
    """Execute pairing between two sides; returns (initiator keys,
    responder keys, on-air transcript)."""
    if method is None:
        method = select_association(initiator_io, responder_io, oob_available)

    def rand128() -> bytes:
        return rng.getrandbits(128).to_bytes(KEY_BYTES, "big")

    if mode is PairingMode.SECURE_CONNECTIONS:
        # Key agreement modeled abstractly: the simulation oracle hands both
        # sides the shared LTK; the transcript exposes only opaque public
        # values that do not determine it.
        ltk = rand128()
        m_rand, s_rand = rand128(), rand128()
        transcript = PairingTranscript(
            m_rand=m_rand,
            s_rand=s_rand,
            m_confirm=rand128(),
            s_confirm=rand128(),
            mode=mode,
            method=method,
            public_values=(rand128(), rand128()),
        )
        keys = KeyMaterial(tk=bytes(KEY_BYTES), ltk=ltk)
        return keys, keys, transcript

    if method.method is Method.OOB:
        oob_tk = derive_tk(method, rng=rng)
        initiator_tk = responder_tk = oob_tk
    elif method.method is Method.PASSKEY:
        initiator_tk = derive_tk(method, initiator_passkey)
        responder_tk = derive_tk(method, responder_passkey)
    else:
        initiator_tk = responder_tk = derive_tk(method)

    m_rand, s_rand = rand128(), rand128()
    m_confirm = confirm_value(initiator_tk, m_rand)
    s_confirm = confirm_value(responder_tk, s_rand)
    # Each side verifies the peer's confirm against its own TK.
    if confirm_value(responder_tk, m_rand) != m_confirm:
        raise ConfirmMismatch("initiator confirm check failed")
    if confirm_value(initiator_tk, s_rand) != s_confirm:
        raise ConfirmMismatch("responder confirm check failed")

    stk = derive_stk(initiator_tk, m_rand, s_rand)
    transcript = PairingTranscript(m_rand, s_rand, m_confirm, s_confirm, mode, method)
    return (
        KeyMaterial(tk=initiator_tk, stk=stk),
        KeyMaterial(tk=responder_tk, stk=stk),
        transcript,
    )


def eavesdrop_recover(transcript: PairingTranscript) -> Optional[bytes]:
    """Recover the session key from a sniffed transcript, or None.

    Legacy Just Works: TK is known to be zero. Legacy Passkey: brute-force
    the six-digit TK against mConfirm. Secure Connections and OOB resist
    passive recovery.
    """
    if transcript.mode is not PairingMode.LEGACY_LE:
        return None
    if transcript.method.method is Method.JUST_WORKS:
        tk = bytes(KEY_BYTES)
        if confirm_value(tk, transcript.m_rand) != transcript.m_confirm:
            return None
        return derive_stk(tk, transcript.m_rand, transcript.s_rand)
    if transcript.method.method is Method.PASSKEY:
        for candidate in range(PASSKEY_MAX + 1):
            tk = candidate.to_bytes(KEY_BYTES, "big")
            if confirm_value(tk, transcript.m_rand) == transcript.m_confirm:
                return derive_stk(tk, transcript.m_rand, transcript.s_rand)
    return None


_NONCE_BYTES = 13


def _nonce(counter: int) -> bytes:
    return counter.to_bytes(_NONCE_BYTES, "big")


def encrypt_link(session_key: bytes, counter: int, plaintext: bytes) -> bytes:
    """AES-CCM authenticated encryption of one link-layer payload."""
    return AESCCM(session_key).encrypt(_nonce(counter), plaintext, None)


def decrypt_link(session_key: bytes, counter: int, ciphertext: bytes) -> bytes:
    try:
        return AESCCM(session_key).decrypt(_nonce(counter), ciphertext, None)
    except InvalidTag as exc:
        raise AuthFailure("link decryption failed") from exc
