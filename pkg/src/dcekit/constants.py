"""Physical constants and reference values quoted for the measured device."""

from scipy.constants import Boltzmann as KB
from scipy.constants import c as C_LIGHT
from scipy.constants import e as E_CHARGE
from scipy.constants import h as H_PLANCK
from scipy.constants import physical_constants

PHI0 = physical_constants["mag. flux quantum"][0]

# Device and setup
I_C = 3.4e-6  # critical current, A
V_GAP = 360e-6  # gap voltage, V
R_SQUID = 69.7  # high-bias resistance, Ohm
Z0 = 50.0  # line impedance, Ohm
V_LINE = 1.2e8  # assumed CPW phase velocity, m/s
T_FRIDGE = 10e-3  # K
BETA_C = 1e4

# Operating point
F_PUMP = 8.9e9
F_MINUS = 4.1e9
F_PLUS = 4.8e9
PHI_DC = -0.41  # Phi0
PUMP_SLOPE = 0.375  # Phi0 per volt of generator output

# Amplifier chain
T_SYS_MINUS = 3.71  # K, system noise at 4.1 GHz
T_SYS_PLUS = 2.95  # K, system noise at 4.8 GHz
DT_SYS_MINUS = 0.04
DT_SYS_PLUS = 0.02
T_HEMT_MINUS = 2.3  # K, HEMT datasheet value at 4.1 GHz
T_HEMT_MINUS_LOSS = 2.2  # K, value used for the loss estimate at 4.1 GHz
T_HEMT_PLUS = 2.0  # K at 4.8 GHz
LOSS_DB_MINUS = -2.3
LOSS_DB_PLUS = -1.7

# Gains before (start) and after (end) the 8 h run.  Band "1" is taken
# to be 4.1 GHz (the f- detector).
G_START_MINUS = 1.3051e9
G_START_MINUS_ERR = 3.4e6
G_END_MINUS = 1.2929e9
G_END_MINUS_ERR = 4.3e6
G_START_PLUS = 1.4906e9
G_START_PLUS_ERR = 3.6e6
G_END_PLUS = 1.4817e9
G_END_PLUS_ERR = 5.6e6

# Off-state power scatter, photons
DP_OFF_MINUS = 0.0025
DP_OFF_PLUS = 0.0021

__all__ = [
    "KB", "C_LIGHT", "E_CHARGE", "H_PLANCK", "PHI0",
    "I_C", "V_GAP", "R_SQUID", "Z0", "V_LINE", "T_FRIDGE", "BETA_C",
    "F_PUMP", "F_MINUS", "F_PLUS", "PHI_DC", "PUMP_SLOPE",
    "T_SYS_MINUS", "T_SYS_PLUS", "DT_SYS_MINUS", "DT_SYS_PLUS",
    "T_HEMT_MINUS", "T_HEMT_MINUS_LOSS", "T_HEMT_PLUS",
    "LOSS_DB_MINUS", "LOSS_DB_PLUS",
    "G_START_MINUS", "G_START_MINUS_ERR", "G_END_MINUS", "G_END_MINUS_ERR",
    "G_START_PLUS", "G_START_PLUS_ERR", "G_END_PLUS", "G_END_PLUS_ERR",
    "DP_OFF_MINUS", "DP_OFF_PLUS",
]
