"""Spectral laboratory for Dirichlet Laplacians on twisted tubes."""

from .geometry import (
    Constant, Ellipse, LinearRate, Polygon, PowerRate, Rectangle, TabulatedRate, contains, disc,
    free_segment, jacobian_det, map_point, max_free_segment, quasibounded_probe, summary,
)
from .eigensolve import EigResult, SparseSym, dense_eig, lobpcg
from .xsection import assemble_xsection, build_grid, eigs_xsection
from .tube import LongitudinalGrid, assemble_tube, eigs_tube, rayleigh_quotient, trial_cylinder_mode
from .certify import (
    bracket_eigenvalues, essential_lower_bound, find_sn, poincare_gap_probe, thm1_window,
)

__version__ = "0.1.0"
