"""Reference numbers frozen before the tests were written.

Analytic values come from the closed-form rate. Oracle values come from the
master-equation integrator at its default settings (cutoff 20, dt*kappa =
0.01, run length 40/kappa). They guard against regressions in either; the
agreement between the two is tested separately at the physical tolerance.
"""

from __future__ import annotations

from modescope.units import TWO_PI

KAPPA = TWO_PI * 1.0e6
CHI = TWO_PI * 0.5e6
EPS = TWO_PI * 0.2e6

# detuning (cavity minus drive) in units of chi -> value
GAMMA_M_ANALYTIC = {
    -2: 100530.96491473378,
    -1: 402123.85965974454,
    0: 502654.82457436697,
    1: 402123.85965974454,
    2: 100530.96491473378,
}
GAMMA_ORACLE = {
    -2: 100534.83618039974,
    -1: 402094.52180076187,
    0: 502641.8994082963,
    1: 402094.52180076187,
    2: 100534.83618039975,
}
STARK_ANALYTIC = {-2: 201061.9298296421, -1: 201061.92982955853, 0: 0.0}
STARK_ORACLE = {-2: 201056.77306017716, -1: 201054.7284815273, 0: 33.351786565836186}

# (n_plus, n_minus) closed form at detuning -chi: eps^2/(kappa^2/4) and eps^2/(kappa^2/4 + 4 chi^2)
PHOTONS_AT_MINUS_CHI = (0.16, 0.032)

# the bus: 7.24 GHz, kappa/2pi = 72.4 kHz
BUS_Q = 100000.0

# n = 1 at 7.24 GHz: T = h f / (k_B ln 2) with exact SI h and k_B
T_FOR_ONE_PHOTON_7P24 = 6.62607015e-34 * 7.24e9 / (1.380649e-23 * 0.6931471805599453)
