"""Quotation-reply argument matching with discrete latent argument representations."""
__version__ = "0.1.0"
