#!/usr/bin/env python3
"""Independent encoder for the canonical update message.

Builds the message for (round=7, device_id="dev-03", scheme_id="dilithium2",
params = 10 SplitMix64-derived doubles from seed 42) with struct.pack and
prints its SHA-256. The value is frozen in tests/test_envelope.cpp.
"""
import hashlib
import struct

MASK = (1 << 64) - 1


def splitmix64(state):
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def params(seed, n):
    gen = splitmix64(seed)
    # top 53 bits -> [0, 1) -> [-1, 1)
    return [(next(gen) >> 11) * 2.0**-53 * 2.0 - 1.0 for _ in range(n)]


def encode(round_, device_id, scheme_id, values):
    d = device_id.encode()
    s = scheme_id.encode()
    out = b"\x01" + struct.pack("<Q", round_)
    out += struct.pack("<B", len(d)) + d
    out += struct.pack("<B", len(s)) + s
    out += struct.pack("<I", len(values))
    out += b"".join(struct.pack("<d", v) for v in values)
    return out


if __name__ == "__main__":
    vals = params(42, 10)
    msg = encode(7, "dev-03", "dilithium2", vals)
    print("len", len(msg))
    print("first_param", repr(vals[0]))
    print("sha256", hashlib.sha256(msg).hexdigest())
    assert encode(0, "a", "m", []).hex() == "01" + "00" * 8 + "01" + "61" + "01" + "6d" + "00" * 4
