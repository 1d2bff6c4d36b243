//! Closed-form tight-binding model of the defect center-of-mass on 6 coupled
//! sites: Bloch eigenstates, the quartet level structure and the selection
//! rules producing the unperturbed quartet emission spectrum.

use alloc::vec::Vec;
use num_complex::Complex64;
// Float trait supplies exp/ln/sqrt on builds without std
#[allow(unused_imports)]
use num_traits::Float;

use crate::sites::SiteSet;
use crate::spectra::{LineSpectrum, SpectralLine, DEFAULT_RESOLUTION_FWHM_MEV};
use crate::{Error, Result};

/// Tunneling splitting of the excited state, meV (2.5 ueV).
pub const DEFAULT_DELTA0_ES_MEV: f64 = 2.5e-3;

/// Electronic level the tight-binding parameters describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    GroundState,
    ExcitedState,
}

/// Tight-binding parameters of one electronic level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorModel {
    /// Uncoupled site energy E0 (meV).
    pub e0_mev: f64,
    /// Nearest-neighbor tunneling energy delta0 (meV).
    pub delta0_mev: f64,
    /// Well spacing a (arbitrary units; observables depend only on k*a).
    pub period: f64,
    pub level: Level,
}

impl RotorModel {
    pub fn new(e0_mev: f64, delta0_mev: f64, period: f64, level: Level) -> Result<RotorModel> {
        if period <= 0.0 || !period.is_finite() {
            return Err(Error::InvalidModel("period must be positive"));
        }
        Ok(RotorModel {
            e0_mev,
            delta0_mev,
            period,
            level,
        })
    }

    /// Ground state with the default assumption delta0_GS = 0.
    pub fn default_ground() -> RotorModel {
        RotorModel {
            e0_mev: 0.0,
            delta0_mev: 0.0,
            period: 1.0,
            level: Level::GroundState,
        }
    }

    /// Excited state with delta0_ES = 2.5 ueV.
    pub fn default_excited() -> RotorModel {
        RotorModel {
            e0_mev: 0.0,
            delta0_mev: DEFAULT_DELTA0_ES_MEV,
            period: 1.0,
            level: Level::ExcitedState,
        }
    }
}

/// One Bloch eigenstate of the 6-site ring.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochState {
    /// Rotational quantum number, 0..=5.
    pub m: usize,
    /// k_m = m pi / (3 a).
    pub wavevector: f64,
    /// Coefficients of |n> for n = 0..=5; all have modulus 1/sqrt(6).
    pub amplitudes: [Complex64; 6],
    pub period: f64,
}

/// The six Bloch states, ordered by m.
pub fn bloch_states(model: &RotorModel) -> Result<[BlochState; 6]> {
    if model.period <= 0.0 || !model.period.is_finite() {
        return Err(Error::InvalidModel("period must be positive"));
    }
    let a = model.period;
    let norm = 1.0 / 6f64.sqrt();
    Ok(core::array::from_fn(|m| {
        let k = m as f64 * core::f64::consts::PI / (3.0 * a);
        let amplitudes = core::array::from_fn(|n| {
            let phase = k * n as f64 * a;
            Complex64::new(0.0, phase).exp() * norm
        });
        BlochState {
            m,
            wavevector: k,
            amplitudes,
            period: a,
        }
    }))
}

/// Rotational overlap `<phi_GS^(m) | phi_ES^(m')>` entering the optical
/// selection rules; 1 for m = m' and 0 otherwise.
pub fn transition_overlap(gs_state: &BlochState, es_state: &BlochState) -> Result<Complex64> {
    if (gs_state.period - es_state.period).abs() > 1e-12 * gs_state.period {
        return Err(Error::IncompatibleBasis(
            "states were built over different periods",
        ));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..6 {
        acc += gs_state.amplitudes[n].conj() * es_state.amplitudes[n];
    }
    Ok(acc)
}

/// The quartet level structure of one electronic level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuartetLevels {
    /// Energies (meV) for the m-classes {0}, {1,5}, {2,4}, {3}, i.e.
    /// E0 + 2 delta0, E0 + delta0, E0 - delta0, E0 - 2 delta0.
    pub energies_mev: [f64; 4],
    pub degeneracies: [u32; 4],
}

impl QuartetLevels {
    /// Consecutive splittings; equal to delta0, 2 delta0, delta0.
    pub fn splittings(&self) -> [f64; 3] {
        [
            self.energies_mev[0] - self.energies_mev[1],
            self.energies_mev[1] - self.energies_mev[2],
            self.energies_mev[2] - self.energies_mev[3],
        ]
    }

    /// All six eigenvalues with multiplicity, ordered by m = 0..=5.
    pub fn by_m(&self) -> [f64; 6] {
        let e = &self.energies_mev;
        [e[0], e[1], e[2], e[3], e[2], e[1]]
    }
}

/// Eigenenergies E^(m) = E0 + 2 delta0 cos(m pi / 3).
pub fn eigen_energies(model: &RotorModel) -> QuartetLevels {
    let e0 = model.e0_mev;
    let d = model.delta0_mev;
    QuartetLevels {
        energies_mev: [e0 + 2.0 * d, e0 + d, e0 - d, e0 - 2.0 * d],
        degeneracies: [1, 2, 2, 1],
    }
}

/// Emission quartet of an unperturbed defect.
///
/// Lines sit at `zpl_center + 2 (delta0_ES - delta0_GS) cos(m pi / 3)` with
/// degeneracy-weighted intensities 1:2:2:1 normalized to unit total, giving
/// consecutive splittings Delta - 2 Delta - Delta.
pub fn quartet_spectrum(
    gs: &RotorModel,
    es: &RotorModel,
    zpl_center_mev: f64,
) -> Result<LineSpectrum> {
    if gs.level != Level::GroundState || es.level != Level::ExcitedState {
        return Err(Error::InvalidModel(
            "quartet_spectrum expects (ground, excited) models",
        ));
    }
    let delta = es.delta0_mev - gs.delta0_mev;
    let lines: Vec<SpectralLine> = if delta == 0.0 {
        alloc::vec![SpectralLine {
            energy_mev: zpl_center_mev,
            weight: 1.0,
            sites: SiteSet::ALL,
        }]
    } else {
        let classes: [(f64, f64); 4] = [
            (2.0, 1.0 / 6.0),
            (1.0, 2.0 / 6.0),
            (-1.0, 2.0 / 6.0),
            (-2.0, 1.0 / 6.0),
        ];
        let mut v: Vec<SpectralLine> = classes
            .iter()
            .map(|&(c, w)| SpectralLine {
                energy_mev: zpl_center_mev + c * delta,
                weight: w,
                sites: SiteSet::ALL,
            })
            .collect();
        v.sort_by(|a, b| b.energy_mev.total_cmp(&a.energy_mev));
        v
    };
    Ok(LineSpectrum {
        lines,
        resolution_fwhm_mev: DEFAULT_RESOLUTION_FWHM_MEV,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m0_is_uniform_and_m3_alternates() {
        let states = bloch_states(&RotorModel::default_excited()).unwrap();
        let norm = 1.0 / 6f64.sqrt();
        assert_eq!(states[0].wavevector, 0.0);
        for n in 0..6 {
            assert!((states[0].amplitudes[n] - Complex64::new(norm, 0.0)).norm() < 1e-15);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((states[3].amplitudes[n] - Complex64::new(sign * norm, 0.0)).norm() < 1e-12);
        }
        assert!((states[3].wavevector - core::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn bloch_states_orthonormal() {
        let states = bloch_states(&RotorModel::default_excited()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let ov = transition_overlap(&states[i], &states[j]).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ov.norm() - expect).abs() < 1e-12, "({i},{j}): {ov}");
            }
        }
    }

    #[test]
    fn overlap_rejects_mismatched_periods() {
        let a = bloch_states(&RotorModel::default_ground()).unwrap();
        let model_b = RotorModel::new(0.0, 1.0, 2.0, Level::ExcitedState).unwrap();
        let b = bloch_states(&model_b).unwrap();
        assert!(transition_overlap(&a[0], &b[0]).is_err());
    }

    #[test]
    fn non_positive_period_rejected() {
        assert!(RotorModel::new(0.0, 1.0, 0.0, Level::GroundState).is_err());
        let mut m = RotorModel::default_ground();
        m.period = -1.0;
        assert!(bloch_states(&m).is_err());
    }

    #[test]
    fn quartet_levels_and_splittings() {
        let m = RotorModel::new(0.0, 1.0, 1.0, Level::ExcitedState).unwrap();
        let q = eigen_energies(&m);
        assert_eq!(q.energies_mev, [2.0, 1.0, -1.0, -2.0]);
        assert_eq!(q.degeneracies, [1, 2, 2, 1]);
        assert_eq!(q.splittings(), [1.0, 2.0, 1.0]);
    }

    #[test]
    fn uncoupled_limit_is_sixfold_degenerate() {
        let m = RotorModel::new(0.0, 0.0, 1.0, Level::GroundState).unwrap();
        let q = eigen_energies(&m);
        assert!(q.energies_mev.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn quartet_spectrum_splittings() {
        let gs = RotorModel::default_ground();
        let es = RotorModel::default_excited();
        let ls = quartet_spectrum(&gs, &es, 969.7).unwrap();
        assert_eq!(ls.lines.len(), 4);
        let e: Vec<f64> = ls.lines.iter().map(|l| l.energy_mev).collect();
        let delta = 2.5e-3;
        // absolute tolerance limited by cancellation against the ~1 eV center
        assert!((e[0] - e[1] - delta).abs() < 1e-12);
        assert!((e[1] - e[2] - 2.0 * delta).abs() < 1e-12);
        assert!((e[2] - e[3] - delta).abs() < 1e-12);
        // outer span 4 Delta = 10 ueV
        assert!((e[0] - e[3] - 4.0 * delta).abs() < 1e-12);
        let w: Vec<f64> = ls.lines.iter().map(|l| l.weight).collect();
        assert_eq!(w, alloc::vec![1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0]);
    }

    #[test]
    fn equal_couplings_collapse_to_single_line() {
        let gs = RotorModel::new(0.0, 0.6e-3, 1.0, Level::GroundState).unwrap();
        let es = RotorModel::new(0.0, 0.6e-3, 1.0, Level::ExcitedState).unwrap();
        let ls = quartet_spectrum(&gs, &es, 969.7).unwrap();
        assert_eq!(ls.lines.len(), 1);
        assert_eq!(ls.lines[0].energy_mev, 969.7);
    }

    #[test]
    fn splittings_subtract_between_levels() {
        let gs = RotorModel::new(0.0, 0.1e-3, 1.0, Level::GroundState).unwrap();
        let es = RotorModel::new(0.0, 0.6e-3, 1.0, Level::ExcitedState).unwrap();
        let ls = quartet_spectrum(&gs, &es, 0.0).unwrap();
        let e: Vec<f64> = ls.lines.iter().map(|l| l.energy_mev).collect();
        // per-m subtraction of the two quartets at Delta = 0.5 ueV
        let d = 0.5e-3;
        assert!((e[0] - e[1] - d).abs() < 1e-15);
        assert!((e[1] - e[2] - 2.0 * d).abs() < 1e-15);
        assert!((e[2] - e[3] - d).abs() < 1e-15);
    }

    #[test]
    fn spectrum_symmetric_about_center_and_normalized() {
        let gs = RotorModel::default_ground();
        let es = RotorModel::default_excited();
        for delta in [1e-3, 2.5e-3, 7.7e-3] {
            let es = RotorModel { delta0_mev: delta, ..es };
            let ls = quartet_spectrum(&gs, &es, 100.0).unwrap();
            let total: f64 = ls.lines.iter().map(|l| l.weight).sum();
            assert!((total - 1.0).abs() < 1e-15);
            let centroid: f64 = ls.lines.iter().map(|l| l.weight * l.energy_mev).sum();
            assert!((centroid - 100.0).abs() < 1e-9);
        }
    }
}
