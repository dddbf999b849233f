"""Risk-based static security assessment of transmission grids.

Combines nonsequential Monte Carlo sampling of load and wind uncertainty
with brute-force N-1/N-2/N-3 line and N-1 bus outage enumeration, solving a
DC optimal power flow with a load-shedding penalty for every scenario and
aggregating probability-weighted cost-deviation risk indicators.
"""

__version__ = "0.1.0"
