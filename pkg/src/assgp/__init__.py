"""Symbolic construction and verification of small-subgroup-generating group
topologies on free groups of countably infinite rank.

The package builds finite neighbourhood systems over finite sub-alphabets,
extends them through a poset of conditions whose dense sets force Hausdorff
separation, conjugacy density and ASSGP factorizations, and emits
machine-checkable certificates for every claim it makes at desk scale.
"""

__version__ = "0.1.0"
