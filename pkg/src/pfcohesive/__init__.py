"""Cohesive laws generated by one-dimensional phase-field fracture models.

Modules: ``numerics`` (quadrature, root finding, tabulation), ``model``
(ingredients and hypothesis checks), ``forward`` (model -> cohesive law),
``reconstruct`` (cohesive law -> model ingredient), ``catalog`` (closed-form
examples), ``oracle`` (brute-force cross-check) and ``cli``.
"""

__version__ = "0.1.0"
