"""radialflow: symbolic and numerical verification toolkit for radial
compressible fluid flow in n > 1 dimensions.

Subpackages and modules map onto the pieces of the verification:

- ``expr``        jet-space computer-algebra kernel (parser, Euler operators)
- ``model``       radial Euler system, EOS catalog, gas-dynamics equivalence
- ``symmetry``    point/generalized symmetries, determining equations, groups
- ``hamiltonian`` co-symplectic operator, variational gradients, brackets
- ``casimir``     recursion operator, advected hierarchy, Casimir checks
- ``advected``    entropic hierarchy, the A quadrature, higher symmetries
- ``solver``      finite-volume radial gas solver and balance reports
- ``cli``         one entry point for all verifications
"""

__version__ = "0.1.0"
