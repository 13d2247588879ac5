"""Pinned physical constants (SI) and unit conversions."""

# CODATA 2018 reduced Planck constant
HBAR = 1.054571817e-34  # J s

# CODATA 2018 Newtonian constant of gravitation
G_NEWTON = 6.67430e-11  # m^3 kg^-1 s^-2

# Nominal Earth mass
M_EARTH = 5.9722e24  # kg

# Mean Earth radius; default distance from the lower mirror to the Earth center
R_EARTH = 6.371e6  # m

# Standard gravitational acceleration, default estimation target
G_STANDARD = 9.81  # m/s^2

# 1 Gal = 1e-2 m/s^2, so 1 uGal = 1e-8 m/s^2
UGAL = 1.0e-8  # m/s^2
