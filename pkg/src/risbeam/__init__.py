"""Max-min rate optimization for a hybrid active-passive RIS-assisted MISO downlink.

Subpackages:

- ``channel``       random geometry and Rayleigh/Rician channel generation
- ``system_model``  scenario constants, rates, RIS transmit power, SINR quadratic forms
- ``socp``          real second-order cone programs and a dense interior-point solver
- ``sca``           convex surrogates, the two subproblem builders and the
                    alternating ascent loop
- ``experiments``   Monte Carlo schemes, sweeps and CSV/figure reporting
"""

from risbeam.system_model import Scenario, paper_scenario, desk_scenario

__all__ = ["Scenario", "paper_scenario", "desk_scenario"]
