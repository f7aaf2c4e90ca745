"""Low-discrepancy point sets driving a pre-sampled probabilistic roadmap planner."""

from lowdisc.pointset import BoundsBox, PointSet

__version__ = "0.1.0"

__all__ = ["PointSet", "BoundsBox", "__version__"]
