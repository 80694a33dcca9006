"""Monte Carlo stochastic-geometry simulator for multi-tier wireless networks."""

__version__ = "1.0.0"
