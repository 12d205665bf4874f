"""Reference frames: dq rotations and static-frame lifting.

Conventions
-----------
* A dq quantity is written as the real pair ``[x, y]`` (``d``/``q`` or
  ``x``/``y``) and identified with the complex number ``x + j y``.
* A local frame *leads* the system frame by ``dtheta``: a vector with system
  coordinates ``v_sys`` has local coordinates ``v_loc = T(dtheta) v_sys`` with
  ``T = [[cos, sin], [-sin, cos]]``.  Consequently an admittance measured in
  the local frame maps to the system frame as ``Y_sys = T^{-1} Y_loc T``.
* A complex-coefficient scalar transfer function ``F(s)`` in the static
  (stationary) frame lifts to the real 2x2 form
  ``[[Re F, -Im F], [Im F, Re F]]`` where ``Re F = (F + F*)/2`` and
  ``Im F = (F - F*)/(2j)``, ``F*`` denoting ``F`` with conjugated
  coefficients.  The dq-frame version substitutes ``s -> s + j w0`` first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .poly_tf import RationalFunction, TFMatrix

#: Default nominal angular frequency (rad/s).
OMEGA0 = 377.0

FRAME_KINDS = ("system", "local", "static", "alphabeta")


@dataclass(frozen=True)
class FrameTag:
    """Frame of an admittance block.

    Attributes
    ----------
    angle : float
        Angle (rad) by which the block's d-axis leads the system d-axis.
    kind : str
        One of ``system``, ``local``, ``static``, ``alphabeta``.
    """

    angle: float = 0.0
    kind: str = "system"

    def __post_init__(self):
        if self.kind not in FRAME_KINDS:
            raise ValueError(f"unknown frame kind {self.kind!r}; expected one of {FRAME_KINDS}")
        if not np.isfinite(self.angle):
            raise ValueError("frame angle must be finite")

    @classmethod
    def system(cls) -> "FrameTag":
        return cls(0.0, "system")

    @classmethod
    def local(cls, angle: float) -> "FrameTag":
        return cls(float(angle), "local")


@dataclass(frozen=True)
class AdmittanceBlock:
    """A source or branch admittance plus the metadata needed for assembly.

    Attributes
    ----------
    Y : TFMatrix
        2x2 dq admittance (or 1x1 static-frame complex admittance).
    bus : hashable, optional
        Bus the block connects to.
    frame : FrameTag
        Frame in which ``Y`` is expressed.  Assembly requires ``system``.
    injection_positive : bool
        ``True`` when ``Y = -C(sI-A)^{-1}B - D`` with outputs the current
        injected by the device (the package-wide convention).
    operating_point : dict
        Calibration condition (``P``, ``Q``, ``V``, ``theta``) used by the
        operating-point guard; empty for passive blocks.
    label : str
        Human-readable name used in error messages.
    """

    Y: TFMatrix
    bus: Any = None
    frame: FrameTag = field(default_factory=FrameTag.system)
    injection_positive: bool = True
    operating_point: dict = field(default_factory=dict)
    label: str = ""

    def evaluate(self, s: complex) -> np.ndarray:
        return self.Y(s)


def rotation(dtheta: float) -> np.ndarray:
    """Rotation ``T = [[cos, sin], [-sin, cos]]`` for a frame leading by ``dtheta``."""
    c, s = np.cos(dtheta), np.sin(dtheta)
    return np.array([[c, s], [-s, c]])


def rotate_admittance(block: AdmittanceBlock, to_frame: FrameTag) -> AdmittanceBlock:
    """Express a 2x2 dq block in another dq frame by similarity transform.

    With ``R = T(angle_to - angle_from)`` the result is ``R Y R^{-1}``; for
    a local block going to the system frame this is ``T^{-1} Y_loc T``.

    Raises
    ------
    ValueError
        For static/alpha-beta blocks or non-2x2 matrices.
    """
    if block.frame.kind in ("static", "alphabeta") or to_frame.kind in ("static", "alphabeta"):
        raise ValueError("rotation applies only to dq (system/local) frames, "
                         f"got {block.frame.kind!r} -> {to_frame.kind!r}")
    if block.Y.shape != (2, 2):
        raise ValueError(f"rotation needs a 2x2 block, got {block.Y.shape}")
    R = rotation(to_frame.angle - block.frame.angle)
    Y = TFMatrix.from_constant(R) @ block.Y @ TFMatrix.from_constant(R.T)
    return replace(block, Y=Y, frame=to_frame)


def _re_im(F: RationalFunction) -> tuple[RationalFunction, RationalFunction]:
    """Real-coefficient rational functions ``Re F`` and ``Im F``."""
    if not F.is_complex:
        return F, RationalFunction.zero()
    # With F* the coefficient conjugate, (F + F*)/2 = Re(n d*)/(d d*) and
    # (F - F*)/2j = Im(n d*)/(d d*), where Re/Im act on coefficients.
    n, d = F.num, F.den
    db = d.conj()
    den = (d * db).real_part()
    a = n * db
    re = RationalFunction(a.real_part(), den)
    im = RationalFunction(a.imag_part(), den)
    return re, im


def static_to_alphabeta(F: RationalFunction) -> TFMatrix:
    """Lift a static-frame complex TF to the real 2x2 alpha-beta form."""
    re, im = _re_im(F)
    return TFMatrix([[re, -im], [im, re]])


def static_to_dq(F: RationalFunction, omega0: float = OMEGA0) -> TFMatrix:
    """Lift a static-frame complex TF to the dq frame rotating at ``omega0``.

    ``F(s)`` is shifted to ``F(s + j omega0)`` and then split into real and
    imaginary parts.  Every static pole ``p`` appears as ``p - j omega0``
    and its conjugate.
    """
    return static_to_alphabeta(F.shift(1j * omega0))


__all__ = [
    "OMEGA0", "FrameTag", "AdmittanceBlock", "rotation", "rotate_admittance",
    "static_to_alphabeta", "static_to_dq",
]
