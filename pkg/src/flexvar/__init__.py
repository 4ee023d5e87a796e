"""
TVP-VARs whose coefficients are driven by observed and latent effect
modifiers, estimated with an equation-by-equation Gibbs sampler.
"""

__version__ = "1.0.0b0"
