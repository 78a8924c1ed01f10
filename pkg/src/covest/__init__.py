"""Optimal covariant estimation of a shift parameter in a pure state.

Submodules: ``states`` (gridded spectral profiles), ``spectral``
(characteristic functions and convolution powers), ``optimal`` (the optimal
covariant observable and its uncertainty functionals), ``semiclassical``
(Fisher bounds and Pitman estimators), ``asymptotics`` (large-n sweeps and
limit laws) and ``special`` (K0 and quadrature helpers).
"""

__version__ = "0.1.0"

from .errors import CovestError  # noqa: E402
from .states import DensityGrid, GridSpec, WavefunctionGrid, center, density, make_state, moments  # noqa: E402
from .optimal import d_star, delta_star, optimal_density, uncertainty_report  # noqa: E402
from .spectral import char_fn, conv_power  # noqa: E402

__all__ = [
    "__version__", "CovestError", "DensityGrid", "GridSpec", "WavefunctionGrid", "center", "density",
    "make_state", "moments", "d_star", "delta_star", "optimal_density", "uncertainty_report", "char_fn",
    "conv_power",
]
