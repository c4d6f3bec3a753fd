"""Monte Carlo simulation and offloading optimisation for uplink IoT over non-terrestrial networks."""

__version__ = "0.1.0"
