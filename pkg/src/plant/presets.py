"""
Reference plant data.

IDENTIFIED_DYNAMICS holds the identified reduced-model constants verbatim and
is the default plant for design and simulation. DEFAULT_PHYSICAL is a calibrated
parameter set (Quanser SRV02 + pendulum, high gear) whose reduced model
reproduces every identified constant within 0.1 %.
"""

import math

from plant.models import PhysicalParams, ReducedDynamics

IDENTIFIED_DYNAMICS = ReducedDynamics(
    Ainv=[[289.1545, 278.1123], [278.1123, 475.5730]],
    b11=20.6543,
    b12=0.6675,
    b21=19.8655,
    b22=1.1414,
    c1=-58.3839,
    c2=-99.8366,
    v1=37.1285,
    v2=35.7106,
    a1=-2.0852,
    a2=-1.3366,
    a3=1.0028,
    a4=-2.0056,
    a5=-1.2855,
    a6=1.7148,
)

# B1 and B2 are fit parameters: only B1 + u2 and B2 are observable in the
# damping block, and both fits land on 0.0024 N m s/rad.
DEFAULT_PHYSICAL = PhysicalParams(
    M1=0.257,
    M2=0.127,
    L1=0.216,
    L2=0.337,
    J1=0.001,
    J2=0.0012,
    B1=0.0024,
    B2=0.0024,
    g=9.81,
    eta_g=0.9,
    eta_m=0.69,
    K_g=70.0,
    K_t=0.00768,
    K_m=0.00768,
    R_m=2.6,
    arm_com_ratio=2.0 / 7.0,
)

# Balance-and-track design used on the bench
BENCH_POLES = (complex(-2.0, 1.606), complex(-2.0, -1.606), -10.0, -12.0, -15.0)
BENCH_GAINS = (-7.302, -6.348, 27.681, -3.166, 3.829)
BENCH_ZETA = 0.7797
BENCH_SIGMA = 2.0
BENCH_FAR_MULTIPLIERS = (5.0, 6.0, 7.5)

ENCODER_QUANTUM = 2.0 * math.pi / (4 * 1024)
