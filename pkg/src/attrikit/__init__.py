"""Feature attribution as integration of a model against per-feature measures."""

__version__ = "0.1.0"

from .attribution import AttributionReport, attribute, conditional_expectation, marginal_product, pdp
from .errors import AttrikitError, CapacityError, UndefinedMetricError, ValidationError
from .measures import MeasureFamily
from .model import Expression, LinearModel, ReluNetwork, load_network

__all__ = [
    "AttributionReport", "AttrikitError", "CapacityError", "Expression", "LinearModel", "MeasureFamily",
    "ReluNetwork", "UndefinedMetricError", "ValidationError", "__version__", "attribute",
    "conditional_expectation", "load_network", "marginal_product", "pdp",
]
