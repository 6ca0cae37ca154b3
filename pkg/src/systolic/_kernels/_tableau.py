"""Dormand-Prince 8(5,3) tableau, taken from SciPy's DOP853 implementation."""

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES  # 12
A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES], dtype=np.float64)
B = np.ascontiguousarray(_dop.B, dtype=np.float64)
C = np.ascontiguousarray(_dop.C[:N_STAGES], dtype=np.float64)
E3 = np.ascontiguousarray(_dop.E3, dtype=np.float64)
E5 = np.ascontiguousarray(_dop.E5, dtype=np.float64)
ERROR_EXPONENT = -1.0 / 8.0
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

# status codes returned by the adaptive driver
OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2
NONFINITE = 3
