"""Modular small-signal analysis of inverter-penetrated grids.

Components are described by dq-frame admittance matrices (analytic,
numerically linearized, or identified from step responses), assembled
into a network admittance ``Y(s)``, and assessed through the zeros of
``det(Y(s))``, generalized Nyquist loci, modal impedances and singular
values.
"""

__version__ = "0.1.0"

from .poly_tf import Polynomial, RationalFunction, TFMatrix, det_roots, tf_det  # noqa: E402
from .statespace import StateSpace, ss_to_admittance, linearize  # noqa: E402
from .frames import AdmittanceBlock, FrameTag, rotate_admittance, static_to_dq  # noqa: E402
from .network import NetworkCase, assemble_total, kron_reduce, power_flow, thevenin  # noqa: E402
from .stability import EigenReport, eigs_from_admittance, nyquist_loci, rma_sweep, sigma_sweep  # noqa: E402

__all__ = [
    "__version__", "Polynomial", "RationalFunction", "TFMatrix", "det_roots", "tf_det",
    "StateSpace", "ss_to_admittance", "linearize", "AdmittanceBlock", "FrameTag",
    "rotate_admittance", "static_to_dq", "NetworkCase", "assemble_total", "kron_reduce",
    "power_flow", "thevenin", "EigenReport", "eigs_from_admittance", "nyquist_loci",
    "rma_sweep", "sigma_sweep",
]
