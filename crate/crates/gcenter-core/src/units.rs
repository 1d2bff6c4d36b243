//! Unit conversions. Energies are carried in meV internally; µeV, GHz and nm
//! are I/O conversions.

use crate::{Error, Result};

/// hc in nm·eV.
pub const HC_NM_EV: f64 = 1239.841984;

/// 1 meV in GHz.
pub const GHZ_PER_MEV: f64 = 241.799;

/// Boltzmann constant in meV/K.
pub const BOLTZMANN_MEV_PER_K: f64 = 0.086_173_332_62;

pub fn mev_to_ghz(e_mev: f64) -> f64 {
    e_mev * GHZ_PER_MEV
}

pub fn ghz_to_mev(f_ghz: f64) -> f64 {
    f_ghz / GHZ_PER_MEV
}

pub fn uev_to_mev(e_uev: f64) -> f64 {
    e_uev * 1e-3
}

pub fn mev_to_uev(e_mev: f64) -> f64 {
    e_mev * 1e3
}

/// Photon wavelength (nm) to energy (meV).
pub fn nm_to_mev(lambda_nm: f64) -> Result<f64> {
    if lambda_nm <= 0.0 {
        return Err(Error::OutOfRange("wavelength must be positive"));
    }
    Ok(1e3 * HC_NM_EV / lambda_nm)
}

/// Photon energy (meV) to wavelength (nm).
pub fn mev_to_nm(e_mev: f64) -> Result<f64> {
    if e_mev <= 0.0 {
        return Err(Error::OutOfRange("energy must be positive"));
    }
    Ok(1e3 * HC_NM_EV / e_mev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_anchor() {
        assert_eq!(nm_to_mev(HC_NM_EV).unwrap(), 1000.0);
    }

    #[test]
    fn zpl_wavelength() {
        // 1278.6 nm ZPL
        let e = nm_to_mev(1278.6).unwrap();
        assert!((e - 969.69).abs() < 5e-3, "{e}");
    }

    #[test]
    fn round_trip() {
        for &nm in &[1278.6, 1382.0, 500.0] {
            let back = mev_to_nm(nm_to_mev(nm).unwrap()).unwrap();
            assert!((back - nm).abs() / nm < 1e-10);
        }
    }

    #[test]
    fn non_positive_rejected() {
        assert!(nm_to_mev(0.0).is_err());
        assert!(mev_to_nm(-1.0).is_err());
    }

    #[test]
    fn thermal_energy_at_30k() {
        assert!((30.0 * BOLTZMANN_MEV_PER_K - 2.585).abs() < 1e-2);
    }
}
