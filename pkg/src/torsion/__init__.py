"""Refined and dynamical torsion at finite-dimensional scale.

Submodules
----------
complex_core   cochain complexes, refined/chirality/signature torsion, variation formulas
exterior       contact exterior algebra and its chirality
contact_model  resonance models of a contact flow
morse_turaev   twisted CW complexes, Turaev torsion, Euler structures
zeta_orbits    orbit catalogs and twisted Ruelle zeta functions
dyntorsion     spectral cuts and the dynamical torsion
exact          exact linear algebra over Gaussian rationals and cyclotomic fields
instances      random generators for complexes, chiralities and families
io             JSON instance formats
verify         property suites behind ``torsion verify-all``
cli            the ``torsion`` command
"""
__version__ = "0.1.0"
