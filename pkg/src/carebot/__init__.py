"""carebot: a desk-scale, fully testable care-facility robot stack."""

__version__ = "0.1.0"
