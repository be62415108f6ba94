"""Spherical t-designs, spherical tight framelets and local-soft denoising."""
