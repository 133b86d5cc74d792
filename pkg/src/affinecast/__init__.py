"""affinecast: linear forecasting models, closed-form fits, and affine equivalence checks."""

__version__ = "0.1.0"
