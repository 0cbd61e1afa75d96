"""Expressivity analysis of message-passing GNNs against graph-augmented MLPs.

WL and GA-MLP equivalence classes, exact walk counting, verified
counterexample constructions, tree enumerators and an SBM benchmark.
"""
from .graph import (Graph, GraphCollection, GraphFormatError, NodeFeatures, RootedGraph, load_edge_list,
                    load_features, max_degree)
from .operators import OperatorFamily, OperatorSpec, Tower, apply, leading_eigenvectors

__all__ = [
    "Graph", "GraphCollection", "GraphFormatError", "NodeFeatures", "RootedGraph", "load_edge_list",
    "load_features", "max_degree", "OperatorFamily", "OperatorSpec", "Tower", "apply", "leading_eigenvectors",
]
