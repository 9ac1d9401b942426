"""Interaction-level dark-pattern auditing for data-rights request portals.

The package simulates rights-request portals as navigation state machines,
records evidence-linked workflow traces, detects eight dark-pattern
categories through 29 executable harm-mechanism rules, assembles the four
prompt configurations for a pluggable remote classifier, and evaluates any
classifier with confusion metrics, agreement statistics, bootstrap deltas,
and prevalence intervals.
"""

from .taxonomy import Category, subtype_catalog

__version__ = "0.1.0"

__all__ = ["Category", "subtype_catalog", "__version__"]
