"""Random unimodular lattices versus Poisson point processes in a region.

Modules: ``regions`` (test sets S), ``lattice`` (Haar sampling, LLL,
enumeration), ``pointprocess`` (Poisson configurations), ``sieve`` (exact
rank-filtered inclusion-exclusion), ``estimators`` (Monte Carlo checks)
and ``cli``.
"""

__version__ = "0.1.0"
