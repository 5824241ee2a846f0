"""Inverse optimal control for LQG systems with signal-dependent noise.

Thin re-export of the compiled extension; the classes and functions mirror
the C++ API one to one.
"""

from ._sdnioc import *  # noqa: F401,F403
from ._sdnioc import __version__  # noqa: F401
