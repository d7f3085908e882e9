"""
Numerical core of multijet.
Polynomials, simplex quadrature, divided differences, configuration-space
kernels, Gaussian fields and the Kac-Rice machinery.
"""
