"""CAR flows over lattice cones: Fock space, shift representations, product systems."""

__version__ = "0.1.0"
