"""Free-surface observation series: generation, noise, text-file persistence.

File format (self-describing text): a header line `nx dt nsteps` (1D) or
`nx ny dt nsteps` (2D), then one whitespace-separated row of nodal
free-surface values per stored time level (nsteps + 1 rows), written with 17
significant digits in node order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .forward import ForwardConfig, heun_step, make_state


@dataclass
class ObservationSeries:
    dt: float
    data: np.ndarray   # (n_steps + 1, N)
    nx: int
    ny: int = 0        # 0 in 1D

    @property
    def n_steps(self):
        return self.data.shape[0] - 1

    @property
    def t_final(self):
        return self.n_steps * self.dt

    def at_step(self, k):
        return self.data[k]

    def at_time(self, t):
        """Linear interpolation in time (exact at stored levels)."""
        s = t / self.dt
        k = int(np.floor(s + 1e-9))
        k = min(max(k, 0), self.n_steps)
        frac = s - k
        if abs(frac) < 1e-9 or k == self.n_steps:
            return self.data[k]
        return (1.0 - frac) * self.data[k] + frac * self.data[k + 1]


def generate_observations(scenario, ops, b_true=None, return_state=False):
    """Run the configured truth solver with the reference bathymetry and
    record the free surface H = h + b at every step."""
    mesh = ops.mesh
    if b_true is None:
        b_true = scenario.reference_bathymetry(mesh.coords)
    state = make_state(scenario.h0 - b_true, scenario.velocity)
    cfg = scenario.forward_config(mesh, mode="truth")
    n_steps = scenario.n_steps
    data = np.empty((n_steps + 1, mesh.n_nodes))
    data[0] = state.h + b_true
    for n in range(n_steps):
        state = heun_step(state, b_true, ops, cfg)
        data[n + 1] = state.h + b_true
    series = ObservationSeries(dt=scenario.dt, data=data, nx=mesh.nx, ny=mesh.ny)
    return (series, state) if return_state else series


def add_noise(series: ObservationSeries, sigma, seed, mode="multiplicative"):
    """Perturb every stored observation with independent Gaussian noise.

    multiplicative: H * (1 + eta), eta ~ N(0, sigma^2) per node per level;
    additive: H + eta with sigma in meters.
    """
    if sigma < 0:
        raise ConfigError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return ObservationSeries(series.dt, series.data.copy(), series.nx, series.ny)
    rng = np.random.default_rng(seed)
    eta = rng.normal(0.0, sigma, size=series.data.shape)
    if mode == "multiplicative":
        noisy = series.data * (1.0 + eta)
    elif mode == "additive":
        noisy = series.data + eta
    else:
        raise ConfigError(f"unknown noise mode '{mode}'")
    return ObservationSeries(series.dt, noisy, series.nx, series.ny)


def save_observations(series: ObservationSeries, path):
    with open(path, "w") as fh:
        if series.ny:
            fh.write(f"{series.nx} {series.ny} {series.dt:.17g} {series.n_steps}\n")
        else:
            fh.write(f"{series.nx} {series.dt:.17g} {series.n_steps}\n")
        for row in series.data:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_observations(path) -> ObservationSeries:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) == 3:
            nx, ny = int(header[0]), 0
            dt, n_steps = float(header[1]), int(header[2])
        elif len(header) == 4:
            nx, ny = int(header[0]), int(header[1])
            dt, n_steps = float(header[2]), int(header[3])
        else:
            raise ConfigError(f"malformed observation header in {path}")
        data = np.loadtxt(fh, ndmin=2)
    n_nodes = (nx + 1) * ((ny + 1) if ny else 1)
    if data.shape != (n_steps + 1, n_nodes):
        raise ConfigError(
            f"observation payload {data.shape} does not match header "
            f"({n_steps + 1} x {n_nodes}) in {path}")
    return ObservationSeries(dt=dt, data=data, nx=nx, ny=ny)
