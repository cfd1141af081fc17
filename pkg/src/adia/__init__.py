"""Gap-adaptive power-law schedules for adiabatic evolution."""

__version__ = "0.1.0"
