"""Dormand-Prince 8(5,3) coefficients, taken from SciPy's tableau."""
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES
A = [[float(v) for v in row[:N_STAGES]] for row in _dop.A[:N_STAGES]]
B = [float(v) for v in _dop.B]
C = [float(v) for v in _dop.C[:N_STAGES]]
E3 = [float(v) for v in _dop.E3]
E5 = [float(v) for v in _dop.E5]

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0
