"""Classification harness for enhanced flow records.

Trains gradient-boosted tree ensembles on the 20-feature enhanced CSV
produced by the nettisa flow meter and reports standard classification
metrics with gain-based feature importance.
"""

__version__ = "0.1.0"
