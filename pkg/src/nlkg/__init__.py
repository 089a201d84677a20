"""Radial cubic Klein-Gordon solver and blowup/scattering basin mapper.

Evolves u_tt - Lap(u) + u = u^3 for radial data in three space dimensions
via the reduced field v = r*u, classifies each evolution as blowup /
dispersive / indecisive, sweeps two-parameter families of initial data to
chart the forward scattering set, and renders the resulting sections with
Payne-Sattinger region overlays.
"""

__version__ = "0.1.0"
