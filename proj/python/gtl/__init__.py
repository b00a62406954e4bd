"""Desk-scale GSM A5/1 capture, time-memory trade-off and eavesdropping lab."""

try:
    from ._gtl import *  # noqa: F401,F403  (installed package layout)
except ImportError:
    from _gtl import *  # noqa: F401,F403  (extension on PYTHONPATH)
