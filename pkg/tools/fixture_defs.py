"""Shared fixture fields for calibration experiments (mirrors the configs)."""
import numpy as np
from periodic_eigen.grids import SpatialGrid, TimeGrid
from periodic_eigen.coefficients import (MatrixField, FourierEntry, FourierTerm,
                                         DiffusionMatrix)

def generic_field():
    # a11 = 0.35 cos(pi x) + 0.8 cos(pi x) sin(2pi t) + 0.4 cos(2pi t)
    # a22 = -0.4 cos(2pi t)
    # a12 = 0.4 + 0.2 cos(pi x) cos(2pi t)
    return MatrixField(2, {
        (1,1): FourierEntry([FourierTerm(0.35,1), FourierTerm(0.8,1,"sin",1),
                             FourierTerm(0.4,0,"cos",1)]),
        (2,2): FourierEntry([FourierTerm(-0.4,0,"cos",1)]),
        (1,2): FourierEntry([FourierTerm(0.4,0), FourierTerm(0.2,1,"cos",1)]),
    })

def type3_field():
    # a11 = 0.5 cos(2pi t) + 0.1 cos(pi x); a22 = -0.5 cos(2pi t); a12 = 0.6
    return MatrixField(2, {
        (1,1): FourierEntry([FourierTerm(0.5,0,"cos",1), FourierTerm(0.1,1)]),
        (2,2): FourierEntry([FourierTerm(-0.5,0,"cos",1)]),
        (1,2): FourierEntry([FourierTerm(0.6,0)]),
    })

D_GENERIC = DiffusionMatrix((1.0, 2.0))
