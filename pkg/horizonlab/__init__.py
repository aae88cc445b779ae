"""Scalar-positive extensions of apparent-horizon metrics on the 2-sphere"""

__version__ = "1.0.0"
