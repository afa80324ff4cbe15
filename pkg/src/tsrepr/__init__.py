"""Feature-space representativeness analysis for collections of demand series."""
__version__ = "0.1.0"
