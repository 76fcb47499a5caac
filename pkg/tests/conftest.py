import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


class FixedStream:
    """Stream stand-in that replays a given list of hit vertices at times 1, 2, 3, ..."""

    def __init__(self, verts):
        self.verts = np.asarray(verts, dtype=np.int64)
        self.times = np.arange(1, len(self.verts) + 1, dtype=np.float64)
        self.pos = 0

    def take(self, n):
        t = self.times[self.pos:self.pos + n]
        v = self.verts[self.pos:self.pos + n]
        if len(v) < n:
            raise IndexError("fixed stream exhausted")
        self.pos += n
        return t, v

    def take_until(self, t_end, limit=None):
        n = int(np.searchsorted(self.times[self.pos:], t_end, side="right"))
        if limit is not None:
            n = min(n, limit)
        return self.take(n)


@pytest.fixture
def fixed_stream():
    return FixedStream


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
