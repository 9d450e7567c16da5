"""Small-ball-estimate regularity of sampled paths.

Subpackages and modules:

* :mod:`sbepath.paths` (also importable as :mod:`sbepath.process_gen`): sampled paths and
  Gaussian / SDE generators
* :mod:`sbepath.occupation`: occupation measures and small-ball queries
* :mod:`sbepath.deltak`: dyadic difference operators
* :mod:`sbepath.norms`: SBE, Besov and p-variation norms
* :mod:`sbepath.lnd`: local non-determinism diagnostics for Gaussian models
* :mod:`sbepath.young`: sewing, nonlinear Young integrals, ODEs and flows
* :mod:`sbepath.experiments`: Monte Carlo and convergence studies
* :mod:`sbepath.cli`: the `sbepath` command
"""

from ._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
