"""Desk-scale laboratory for edge resolution of filtered backprojection
near rough boundaries.

Modules
-------
kernels   1D interpolation/aperture kernels, Hilbert filter, radial kernel K
boundary  boundary perturbations and roughness diagnostics
phantom   perturbed-disc phantoms
forward   smoothed Radon data
recon     filtered backprojection
dtb       edge-profile predictors and profile extraction
cli       scenario orchestration and the ``dtblab`` command
"""

__version__ = "0.1.0"
