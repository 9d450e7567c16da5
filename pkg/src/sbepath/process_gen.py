"""Path generators and transforms under their task-oriented name.

The implementations live in :mod:`sbepath.paths`, next to
:class:`~sbepath.paths.SampledPath`.
"""

from .paths import (  # noqa: F401
    BrownianMotion,
    CustomCovariance,
    FractionalBrownian,
    GaussianSpec,
    SampledPath,
    check_psd,
    euler_maruyama_1d,
    euler_maruyama_batch,
    gen_gaussian,
    path_rngs,
    perturb,
    reparametrize,
    uniform_times,
)

__all__ = [
    "BrownianMotion",
    "CustomCovariance",
    "FractionalBrownian",
    "GaussianSpec",
    "SampledPath",
    "check_psd",
    "euler_maruyama_1d",
    "euler_maruyama_batch",
    "gen_gaussian",
    "path_rngs",
    "perturb",
    "reparametrize",
    "uniform_times",
]
