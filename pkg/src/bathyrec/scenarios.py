"""Benchmark scenarios: geometry, reference bathymetries, parameter presets.

The presets carry the published parameter sets per scenario, scheme,
method, and noise level; every field can be overridden through the flat
config keys (see runconfig).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .fem import assemble_operators
from .forward import ForwardConfig, make_state
from .inverse import RegWeights
from .mesh import build_structured_mesh

SCENARIO_NAMES = ("hump1d", "cylinders2d", "sliced_cylinder", "sliced_cylinder_proxy")


def hump_bathymetry(coords):
    x = coords[:, 0]
    return np.where((x >= 8.0) & (x <= 12.0), 0.2 - 0.05 * (x - 10.0) ** 2, 0.0)


def cylinders_bathymetry(coords):
    x, y = coords[:, 0], coords[:, 1]
    b = np.zeros(len(coords))
    b[np.hypot(x - 8.0, y - 8.0) <= 4.0] = 0.2
    b[np.hypot(x - 15.0, y - 15.0) <= 2.0] = 0.3
    return b


def sliced_cylinder_bathymetry(coords):
    """Cylinder of height 0.5 and radius 2000 centered at (5000, 5000) with a
    600 m wide slot (depth back to 0) cut along the rotated axis."""
    xs = coords[:, 0] - 5000.0
    ys = coords[:, 1] - 5000.0
    circ = np.where(np.hypot(xs, ys) <= 2000.0, 0.5, 0.0)
    ang = 5.0 * math.pi / 8.0
    c, s = math.cos(ang), math.sin(ang)
    x0 = c * xs + s * ys
    x1 = -s * xs + c * ys
    slot = np.maximum(np.abs(x1) - 300.0, -x0)
    return np.where(slot < 0.0, 0.0, circ)


_BATHYMETRIES = {
    "hump1d": hump_bathymetry,
    "cylinders2d": cylinders_bathymetry,
    "sliced_cylinder": sliced_cylinder_bathymetry,
    "sliced_cylinder_proxy": sliced_cylinder_bathymetry,
}


@dataclass
class ScenarioConfig:
    name: str
    dimension: int
    bounds: tuple
    nx: int
    ny: int
    h0: float                 # initial free-surface elevation (m)
    velocity: tuple           # initial and external velocity (m/s)
    dt: float
    t_final: float
    scheme: str = "alf"       # reconstruction-side forward scheme
    truth_scheme: str = ""    # observation generator; defaults to `scheme`
    method: str = "oc"
    weights: RegWeights = field(default_factory=RegWeights)
    noise_sigma: float = 0.0
    noise_seed: int = 0
    noise_mode: str = "multiplicative"
    solver_tol: float = 1e-8
    output_dir: str = "out"
    output_every: int = 0
    observations_path: str = ""
    gamma_boundary: str = "inflow"
    kkt_mode: str = "full"
    tvd_mode: str = "frozen"
    on_opt_failure: str = "carry"
    alpha_b: float = 1.0
    obs_mode: str = "consistent"   # consistent (inverse-mode truth) | standard

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    @property
    def dx(self):
        lo, hi = self.bounds[0]
        return (hi - lo) / self.nx

    def build_mesh(self):
        if self.dimension == 1:
            mesh = build_structured_mesh(self.bounds[0], self.nx)
        else:
            mesh = build_structured_mesh(self.bounds, self.nx, self.ny)
        mesh.tag_boundary(self.velocity)
        return mesh

    def build_operators(self):
        return assemble_operators(self.build_mesh())

    def reference_bathymetry(self, coords):
        return _BATHYMETRIES[self.name](coords)

    def boundary_data(self, mesh):
        """External (h_e, hv_e) per boundary facet entry, and nodal b_e.

        The reference bathymetry vanishes on every benchmark boundary, so
        h_e = h0 and b_e = 0 there; velocities equal the initial field.
        """
        nb = len(mesh.boundary)
        v = np.atleast_1d(np.asarray(self.velocity, dtype=float))
        h_e = np.full(nb, float(self.h0))
        hv_e = np.tile(self.h0 * v, (nb, 1))
        b_e = np.zeros(mesh.n_nodes)
        return h_e, hv_e, b_e

    def forward_config(self, mesh, mode):
        """Forward solver configuration for `mode` in {truth, inverse}.

        Observations default to the same modified solver as the inverse loop
        ("consistent"); obs_mode="standard" generates them with the plain
        well-balanced scheme instead.
        """
        h_e, hv_e, b_e = self.boundary_data(mesh)
        scheme = (self.truth_scheme or self.scheme) if mode == "truth" else self.scheme
        modified = mode == "inverse" or (mode == "truth" and self.obs_mode == "consistent")
        return ForwardConfig(dt=self.dt, scheme=scheme, alpha_b=self.alpha_b,
                             bathy_diffusion_in_continuity=not modified,
                             subcritical_depth_adjust=modified,
                             h_ext=h_e, hv_ext=hv_e, b_ext=b_e[mesh.boundary.node])

    def initial_reconstruction(self, mesh):
        """Initial bathymetry (boundary-data extension, zero interior) and
        the matching initial flow state h = H0 - b0."""
        _, _, b_e = self.boundary_data(mesh)
        b0 = b_e.copy()
        state = make_state(np.full(mesh.n_nodes, self.h0) - b0, self.velocity)
        return b0, b_e, state


def preset_weights(name, scheme, method, sigma):
    """Published regularization weights per benchmark configuration."""
    w = RegWeights(alpha=1.0)
    noisy = sigma > 0.0
    if name == "hump1d":
        w.gamma = 1e5
        if not noisy:
            w.beta = 1e-11 if scheme == "alf" else 1e-4
        elif method in ("nos", "oc"):
            w.beta = 1e-4
        elif method == "tvd":
            w.beta = 1e-9
            w.epsilon = 1e-2 if sigma < 0.03 else 5e-2
            w.zeta = 1e-4
        else:  # l1l1 / l1l2
            w.beta = 1e-9
            if scheme == "alf":
                w.kappa = 1e-2 if sigma < 0.03 else 5e-2
                w.nu = 1.0
            else:
                w.kappa = 0.015
                w.nu = 1e-1
    elif name == "cylinders2d":
        if not noisy:
            w.beta, w.gamma = 1e-7, 1.0
        else:
            w.gamma = 1e5
            if method in ("nos", "oc"):
                w.beta = 1e-4
            elif method == "tvd":
                w.beta = 1e-9
                w.epsilon = 1e-2 if sigma < 0.03 else 5e-2
                w.zeta = 1e-4 if sigma < 0.03 else 5e-4
            else:
                w.beta = 1e-9
                w.kappa = 1e-2 if sigma < 0.03 else 0.15
                w.nu = 1e-1
    elif name.startswith("sliced_cylinder"):
        w.beta, w.gamma = 5e-5, 1.0
        if method in ("l1l1", "l1l2"):
            w.kappa, w.nu = 1.0, 5e-5
    else:
        raise ConfigError(f"unknown scenario '{name}'")
    return w


def make_scenario(name, method=None, sigma=None, **overrides) -> ScenarioConfig:
    """Scenario preset with Appendix-level defaults, then field overrides."""
    if name == "hump1d":
        scen = ScenarioConfig(name=name, dimension=1, bounds=((0.0, 25.0),),
                              nx=100, ny=0, h0=2.0, velocity=(2.21,),
                              dt=0.03, t_final=200.0, scheme="alf")
    elif name == "cylinders2d":
        scen = ScenarioConfig(name=name, dimension=2,
                              bounds=((0.0, 25.0), (0.0, 25.0)),
                              nx=50, ny=50, h0=2.0, velocity=(2.21, 2.21),
                              dt=0.01, t_final=60.0, scheme="mcl")
    elif name == "sliced_cylinder":
        scen = ScenarioConfig(name=name, dimension=2,
                              bounds=((0.0, 10000.0), (0.0, 10000.0)),
                              nx=100, ny=100, h0=1000.0, velocity=(1.26, 1.26),
                              dt=0.1, t_final=3600.0, scheme="mcl",
                              noise_sigma=0.03, noise_mode="additive",
                              method="l1l1")
    elif name == "sliced_cylinder_proxy":
        scen = ScenarioConfig(name=name, dimension=2,
                              bounds=((0.0, 10000.0), (0.0, 10000.0)),
                              nx=50, ny=50, h0=1000.0, velocity=(1.26, 1.26),
                              dt=0.1, t_final=600.0, scheme="mcl",
                              noise_sigma=0.03, noise_mode="additive",
                              method="l1l1")
    else:
        raise ConfigError(f"unknown scenario '{name}' "
                          f"(expected one of {SCENARIO_NAMES})")
    if method is not None:
        scen.method = method
    if sigma is not None:
        scen.noise_sigma = sigma
    scen.weights = preset_weights(name, scen.scheme, scen.method, scen.noise_sigma)
    if overrides:
        bad = [k for k in overrides if not hasattr(scen, k)]
        if bad:
            raise ConfigError(f"unknown scenario fields: {bad}")
        scen = replace(scen, **overrides)
    return scen
