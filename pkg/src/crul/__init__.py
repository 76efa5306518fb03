"""Ergodic-rate analysis for a two-user cognitive-radio uplink.

The package computes the ergodic rate of a secondary (unlicensed) user that
shares an uplink with a licensed primary user under two access protocols --
rate-splitting (``cr-rsma``) and pure successive interference cancellation
(``cr-sic``) -- together with two conventional NOMA benchmarks.  Every rate
is available through three independent routes that cross-check each other:

* per-realization Monte Carlo over Rayleigh fades (:mod:`crul.montecarlo`),
* closed forms evaluated with Gauss-Laguerre quadrature (:mod:`crul.analytic`),
* adaptive numerical integration of the exact expectations (:mod:`crul.oracle`).

:mod:`crul.cli` exposes the ``crul`` command with ``point``, ``sweep``,
``figure2``, ``figure3`` and ``validate`` subcommands.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
