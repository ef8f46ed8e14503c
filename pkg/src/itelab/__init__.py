"""Interior transmission eigenvalues of radially symmetric media on a disk.

Modules
-------
specialfun
    Bessel functions of integer order, their zeros and zero counts.
radialode
    Radial Helmholtz propagation, Dirichlet spectra and eigenfunction data.
dtn
    Mode-wise Dirichlet-to-Neumann maps, Laurent data, single layers and
    scattering coefficients.
spectra
    Transmission eigenvalue scans, branch events and counting reports.
symbolcalc
    Exact symbolic recursion for the boundary symbol of the D-N map.
cli
    Config-driven experiment runner.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import ItelabError
from .radialode import MediumProfile, Piece

__all__ = ["ItelabError", "MediumProfile", "Piece", "__version__"]
