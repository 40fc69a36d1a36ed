"""
ringsplit

Spectral simulator and analysis toolkit for a two-isotope condensate mixture
in a ring trap: coupled GPE propagation, autocorrelation and separability
time series, revival-time extraction and (r0, a12) separability sweeps.
"""

__version__ = "1.0.0"
__author__ = "ringsplit developers"
