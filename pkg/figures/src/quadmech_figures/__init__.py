"""quadmech_figures: static figure rendering for quadmech CSV outputs."""

__version__ = "0.1.0"
