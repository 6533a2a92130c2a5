"""mrisk - model-risk quantification engine for equity autocallables."""

__version__ = "1.0.0"
