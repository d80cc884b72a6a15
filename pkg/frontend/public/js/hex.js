// Hex editing helpers for the intercept panel. Decoding is limited to the
// Heart Rate Measurement characteristic; everything else stays raw hex.
export const HR_MEASUREMENT_UUID = '0x2a37';
const HEX_RE = /^(?:[0-9a-fA-F]{2})+$/;
export function isValidHex(text) {
    return HEX_RE.test(text);
}
export function hexToBytes(text) {
    if (!isValidHex(text)) {
        throw new Error(`not an even-length hex string: ${JSON.stringify(text)}`);
    }
    const out = [];
    for (let i = 0; i < text.length; i += 2) {
        out.push(parseInt(text.slice(i, i + 2), 16));
    }
    return out;
}
/** Decoded bpm for a Heart Rate Measurement payload, or null when the
 * characteristic is not 0x2A37 or the bytes do not parse. */
export function hrPreview(uuid, hexText) {
    if (uuid.toLowerCase() !== HR_MEASUREMENT_UUID)
        return null;
    if (!isValidHex(hexText))
        return null;
    const bytes = hexToBytes(hexText);
    if (bytes.length < 2)
        return null;
    const flags = bytes[0];
    if (flags & 0x01) {
        if (bytes.length < 3)
            return null;
        return bytes[1] | (bytes[2] << 8);
    }
    return bytes[1];
}
