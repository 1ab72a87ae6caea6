"""Shared fixtures: cached synthetic signals and their pitch tracks.

Two-pass pitch analysis is the expensive step, so signals and tracks used
by several test modules are computed once per session.
"""

from __future__ import annotations

import pytest

from repspeech.phonation import pitch_track_two_pass
from repspeech.synth import synth_pulse_train


class SynthCache:
    def __init__(self):
        self._bufs = {}
        self._tracks = {}

    def pulse(self, f0: float, duration: float = 2.0):
        key = (f0, duration)
        if key not in self._bufs:
            self._bufs[key] = synth_pulse_train(f0, duration)
        return self._bufs[key]

    def track(self, f0: float, duration: float = 2.0):
        key = (f0, duration)
        if key not in self._tracks:
            self._tracks[key] = pitch_track_two_pass(self.pulse(f0, duration))
        return self._tracks[key]


@pytest.fixture(scope="session")
def synth_cache() -> SynthCache:
    return SynthCache()
