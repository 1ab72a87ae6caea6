"""Test-side oracles shared across test modules."""

import struct

import numpy as np


def make_wav_bytes(samples_by_channel, rate, bits=16, format_code=1):
    """Independent byte-level WAV encoder used as the test-side oracle."""
    channels = len(samples_by_channel)
    n = len(samples_by_channel[0])
    frame_size = channels * bits // 8
    body = bytearray()
    for i in range(n):
        for ch in range(channels):
            v = samples_by_channel[ch][i]
            if bits == 16:
                body += struct.pack("<h", v)
            elif bits == 8:
                body += struct.pack("<B", v)
            elif bits == 24:
                body += int(v & 0xFFFFFF).to_bytes(3, "little")
            elif bits == 32:
                body += struct.pack("<i", v)
    header = b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, format_code, channels, rate, rate * frame_size, frame_size, bits
    )
    header += b"data" + struct.pack("<I", len(body))
    return bytes(header + body)


def sort_based_quartiles(values):
    """Independent quantile oracle: linear interpolation between order statistics."""
    v = sorted(values)
    n = len(v)

    def at(p):
        h = (n - 1) * p
        lo = int(np.floor(h))
        hi = min(lo + 1, n - 1)
        return v[lo] + (h - lo) * (v[hi] - v[lo])

    return at(0.5), at(0.25), at(0.75)
