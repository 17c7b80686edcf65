"""COPD severity classification on ICU blood-gas and vital-sign samples.

Rule labeling, graph-based label completion and cross-validated random
forest, k-NN and SVM classifiers, all implemented on numpy.
"""

__version__ = "0.1.0"
