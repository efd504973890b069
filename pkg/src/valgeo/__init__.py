"""Meet and join deviations of valuations on convex polytopes, and the
lengths of Minkowski-interpolation paths they induce."""
from .deviations import Deviation, join_deviation, meet_deviation
from .geometry import (DEFAULT_TOL, EMPTY, Body, BodyFormatError, GeometryError, ToleranceConfig,
                       ball_approx, box, convex_hull, hausdorff_distance, hull_union, interpolate,
                       intersect, load_body, minkowski_sum, segment)
from .paths import LengthEstimate, Path, Segment, path_length, segment_length
from .valuations import (Valuation, intrinsic_volume, intrinsic_volume_valuation, mean_width,
                         steiner_fit, valuation_from_spec, volume, volume_valuation)

__version__ = "0.1.0"
