"""SER evaluation, configuration and result persistence.

The experiment runner (:mod:`risae.evaluation.runner`) and CLI are not
imported here because they depend on the attack and defense modules, which
themselves use the Monte-Carlo harness.
"""

from .analytic import (AnalyticLinkModel, analytic_ser, identity_padded, ml_detection_ser,
                       product_constellation, stream_alphabet)
from .config import ExperimentConfig, bundled_config, load_config, parse_config
from .montecarlo import SerCurve, block_inputs, monte_carlo_ser, wilson_interval
from .results import CSV_COLUMNS, emit_results, read_csv, write_csv, write_plotdata

__all__ = [
    "AnalyticLinkModel", "analytic_ser", "identity_padded", "ml_detection_ser",
    "product_constellation", "stream_alphabet",
    "ExperimentConfig", "bundled_config", "load_config", "parse_config",
    "SerCurve", "block_inputs", "monte_carlo_ser", "wilson_interval",
    "CSV_COLUMNS", "emit_results", "read_csv", "write_csv", "write_plotdata",
]
