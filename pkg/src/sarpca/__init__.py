"""SAR trace simulation, robust-PCA echo separation, Toeplitz rank
analysis, and backprojection imaging."""

__version__ = "0.1.0"
