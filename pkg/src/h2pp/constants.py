"""Physical constants and unit conversions (Hartree atomic units).

Single source for every mass, soft-core parameter and conversion factor
used by the simulator; no other module hard-codes these numbers.
"""

# Proton mass and reduced masses of the model ion (a.u.)
M_PROTON = 1836.0
MU_R = M_PROTON / 2.0                       # relative motion of the two protons
# Electron vs nuclear center of mass.  This value (just under 1) is the one
# that reproduces the documented ground state: E0 = -0.77, <R> = 2.6.
MU_Z = 2.0 * M_PROTON / (2.0 * M_PROTON + 1.0)
M_P = MU_R                                  # reduced proton mass used by the dispersion fit law

# Soft-core regularization of the 1D Coulomb interactions (a.u.^2)
ALPHA_E = 1.0
ALPHA_P = 0.03

# Velocity-gauge coupling carries a small reduced-mass correction factor
MASS_FACTOR = 1.0 + 1.0 / (1.0 + 2.0 * M_PROTON)

# Time: 1 a.u. = 0.02418884 fs
AU_TIME_FS = 0.02418884
FS_TO_AU = 1.0 / AU_TIME_FS

# Wavelength -> angular frequency: omega[a.u.] = 45.5633 / lambda[nm]
NM_TO_OMEGA_AU = 45.5633

# Peak intensity I[W/cm^2] = 3.50945e16 * E0[a.u.]^2 (diagnostic only; pulses
# are specified by vector potential, E0 ~ A0 * omega)
INTENSITY_AU_TO_WCM2 = 3.50945e16


def fs_to_au(t_fs: float) -> float:
    return t_fs * FS_TO_AU


def au_to_fs(t_au: float) -> float:
    return t_au * AU_TIME_FS


def wavelength_nm_to_omega(lambda_nm: float) -> float:
    if lambda_nm <= 0:
        raise ValueError(f"wavelength must be positive, got {lambda_nm}")
    return NM_TO_OMEGA_AU / lambda_nm


def peak_intensity_wcm2(a0: float, omega: float) -> float:
    """Approximate peak intensity of a pulse from its vector-potential amplitude."""
    e0 = a0 * omega
    return INTENSITY_AU_TO_WCM2 * e0 * e0
