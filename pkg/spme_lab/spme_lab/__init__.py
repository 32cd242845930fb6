# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Numerical laboratory for the 1-D stochastic porous medium equation with multiplicative space-time white noise.
"""

__version__ = "0.1.0"
