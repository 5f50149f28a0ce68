"""r-spindle convex hulls of random planar samples, disc-cap geometry and
Monte Carlo checks of their expectation limits and variance orders."""
from .caps import (DiscCap, arc_triangle_area, cap_from_normal_height, cap_triangles,
                   caps_through_pair, lemma1_variance)
from .experiment import (ExperimentConfig, FitResult, MomentEstimate, SampleRecord,
                         estimate_moments, fit_exponent, run_experiment)
from .geom import (EPS_GEO, ArcEdge, DiscPolygon, Point, Side, arc_polygon_area,
                   circle_centers_through, classify_in_disc, segment_area)
from .hull import HullSummary, hull_fast, hull_oracle, summarize
from .rng import Rng
from .shapes import (Circle, ConvexDiscModel, Ellipse, Parametric, boundary_point, contains,
                     model_area, model_from_spec, register_model, sample_uniform)
from .theory import LimitConstants, c1, limit_constants

__version__ = "0.1.0"
