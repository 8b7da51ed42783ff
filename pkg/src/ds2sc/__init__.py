"""Datasheet-to-SystemC modeling pipeline.

Turns a text-extracted hardware datasheet plus a mixed-fill spec IR
template into a compiled, simulated, and functionally verified behavioral
model (one self-contained header plus an executable testbench), driven by
four model-backed agents and a closed-loop compile/simulate/debug state
machine, with independent numeric oracles for verification.
"""

__version__ = "0.1.0"
