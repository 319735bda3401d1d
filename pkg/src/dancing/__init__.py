"""Dancing pairs in projective and path geometry.

Submodules:

* :mod:`dancing.projective` - homogeneous points, lines and conics;
* :mod:`dancing.flat` - point-line pairs, their metric and null surfaces;
* :mod:`dancing.curvature` - curvature of neutral four-metrics and the Einstein ASD family;
* :mod:`dancing.ellipses` - origin-centred area-pi ellipses and their sextic null cone;
* :mod:`dancing.conics` - point-conic pairs and their degenerate conformal structure;
* :mod:`dancing.cli` - seeded verification suites, plots and samples.
"""

from .errors import DanceError

__all__ = ["DanceError"]
__version__ = "0.1.0"
