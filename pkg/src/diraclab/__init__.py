"""Numerical laboratory for the 1+1 dimensional Dirac equation with linear potentials.

Modules: ``core`` (grids, fields, transforms), ``hamiltonian``, ``dynamics``,
``states``, ``klein`` (tunneling and sweeps), ``spectra``, ``ionsim``
(trapped-ion emulation) and ``cli``.
"""

__version__ = "0.1.0"
