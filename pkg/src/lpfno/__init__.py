"""LP-FNO and a zero-padded FNO2d baseline for boundary-to-domain Poisson problems.

Everything below the data generator (tensors, autodiff, FFTs, optimiser)
is implemented here on top of numpy.
"""

__version__ = "0.1.0"
