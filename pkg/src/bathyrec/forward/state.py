"""Flow state and forward-solver configuration."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ForwardSolveError

GRAVITY = 9.81  # m/s^2


@dataclass
class FlowState:
    """Nodal water height h (m) and momentum hv (m^2/s)."""

    h: np.ndarray    # (N,)
    hv: np.ndarray   # (N, d)

    @property
    def v(self):
        return self.hv / self.h[:, None]

    def copy(self):
        return FlowState(self.h.copy(), self.hv.copy())

    def require_positive(self, context=""):
        if not np.all(self.h > 0.0):
            i = int(np.argmin(self.h))
            raise ForwardSolveError(
                f"water height non-positive at node {i} (h={self.h[i]:.3e})"
                + (f" during {context}" if context else "")
                + "; the time step likely violates the CFL condition")


def make_state(h, v):
    """Build a FlowState from height and velocity fields."""
    h = np.asarray(h, dtype=float)
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if v.shape[0] == 1 and h.shape[0] != 1:
        v = np.broadcast_to(v, (h.shape[0], v.shape[1])).copy()
    return FlowState(h=h.copy(), hv=h[:, None] * v)


@dataclass
class ForwardConfig:
    """Scheme selection and the inverse-mode solver switches.

    bathy_diffusion_in_continuity: keep the bathymetry-dependent diffusion
    term in the h-equation (standard, well-balanced forward mode); the
    inverse pipeline switches it off.
    subcritical_depth_adjust: at subcritical outflow nodes replace the
    external depth by h_e - b_i (inverse-mode boundary fix).
    """

    dt: float
    scheme: str = "alf"              # alf | mcl
    gravity: float = GRAVITY
    alpha_b: float = 1.0             # bathymetry correction factor in [0, 1]
    bathy_diffusion_in_continuity: bool = True
    subcritical_depth_adjust: bool = False
    h_ext: np.ndarray = None         # per boundary facet entry
    hv_ext: np.ndarray = None        # (nb, d)
    b_ext: np.ndarray = None         # boundary bathymetry for the depth adjust;
                                     # falls back to the live field if absent
    check_bounds: bool = False       # debug: assert MCL bound satisfaction
    check_cfl: bool = False

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ForwardSolveError(f"dt must be positive, got {self.dt}")
        if not 0.0 <= self.alpha_b <= 1.0:
            raise ForwardSolveError(f"alpha_b must lie in [0, 1], got {self.alpha_b}")
        if self.scheme not in ("alf", "mcl"):
            raise ForwardSolveError(f"unknown scheme '{self.scheme}'")
