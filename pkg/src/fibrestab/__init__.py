"""Exact simplicial homology with stabilization obstruction checks and an
S1 fibre-bundle simulator.

Subpackages of interest:

* ``exactalg``    -- Smith normal form, field ranks, abelian groups
* ``complexes``   -- simplicial complexes, constructions, the space catalog
* ``homology``    -- homology profiles, induced maps
* ``sequences``   -- exactness checking: Mayer-Vietoris, Kunneth, pair LES
* ``obstruction`` -- stabilization obstruction verdicts
* ``bundlesim``   -- chart-based ODE integration on S1 bundles
* ``cli``         -- command-line front end
"""

__version__ = "0.1.0"
