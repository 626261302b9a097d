"""Simulator for one-way quantum computing with driven atoms in thermal cavities.

Modules: :mod:`quantum` (operators and states), :mod:`dynamics` (full and
effective two-atom evolution), :mod:`gates` (controlled-phase synthesis),
:mod:`cluster` (cluster states), :mod:`schedule` (atom-collision timing),
:mod:`grover` (four-element search) and :mod:`cli`.
"""

__version__ = "0.1.0"
