"""Seeded quantum information-flow toolkit (Python bindings)."""

from ._qsim import *  # noqa: F401,F403
from ._qsim import __version__  # noqa: F401
