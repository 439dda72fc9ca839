# cython: language_level=3
"""Compiled build of the blossom matcher; the source is shared with ``_blossom.py``."""

include "_blossom.py"
