"""Series-based synchronization tests for Kuramoto oscillator networks."""

from ._ksync import *  # noqa: F401,F403
from ._ksync import KsyncError, Network

__all__ = [name for name in dir() if not name.startswith("_")]
