"""Toy-scale Pix2Pix with an adaptive generator/discriminator update schedule."""
__version__ = "0.1.0"
