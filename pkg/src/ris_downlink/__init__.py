"""Capacity analysis of an opportunistic time-sharing downlink assisted by a
reconfigurable intelligent surface (RIS).

The package combines an exact Monte Carlo simulator (closed-form optimal
reflection vector, best-user scheduling) with two analytical approximations
of the average sum-rate capacity built on extreme-value theory: one based on
hardening of the reflection channel, one based on a moment-matched gamma law
for the composite channel power.
"""

__version__ = "0.1.0"
