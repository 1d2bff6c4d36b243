//! Numerical eigensolver for the center-of-mass on the 1D rotation coordinate:
//! 6-period cosine potential plus per-well offsets, finite-difference
//! diagonalization, localization analysis and kinetic-scale calibration.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;
// Float trait supplies exp/ln/sqrt on builds without std
#[allow(unused_imports)]
use num_traits::Float;

use crate::sites::SiteSet;
use crate::{Error, Result};

/// Default angular grid size.
pub const DEFAULT_N_GRID: usize = 600;

/// Number of levels returned by [`solve_ring`].
pub const N_LEVELS: usize = 6;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Sampled periodic potential over the rotation coordinate theta in [0, 2pi).
#[derive(Debug, Clone, PartialEq)]
pub struct RingPotential {
    pub barrier_mev: f64,
    pub site_offsets_mev: [f64; 6],
    pub n_grid: usize,
    /// V(theta_i) on the uniform grid theta_i = 2 pi i / n_grid.
    pub values_mev: Vec<f64>,
}

impl RingPotential {
    pub fn theta(&self, i: usize) -> f64 {
        TWO_PI * i as f64 / self.n_grid as f64
    }
}

// Raised-cosine window centered on well w, half-width pi/3. The windows of
// the six wells form a partition of unity, so constant offsets shift the
// potential rigidly, and each window is C^1 with unit value and zero slope
// at its well minimum.
fn well_window(theta: f64, well: usize) -> f64 {
    let center = well as f64 * core::f64::consts::FRAC_PI_3;
    let mut d = crate::wrap(theta - center, TWO_PI);
    if d > core::f64::consts::PI {
        d -= TWO_PI;
    }
    if d.abs() >= core::f64::consts::FRAC_PI_3 {
        0.0
    } else {
        (1.5 * d).cos().powi(2)
    }
}

/// Build `V(theta) = (barrier/2)(1 - cos 6 theta) + sum_w offset_w win_w(theta)`.
pub fn build_potential(
    barrier_mev: f64,
    site_offsets_mev: [f64; 6],
    n_grid: usize,
) -> Result<RingPotential> {
    if n_grid % 6 != 0 || n_grid < 48 {
        return Err(Error::InvalidGrid(
            "n_grid must be a multiple of 6 and at least 48",
        ));
    }
    if barrier_mev < 0.0 {
        return Err(Error::InvalidModel("barrier must be nonnegative"));
    }
    let values_mev = (0..n_grid)
        .map(|i| {
            let theta = TWO_PI * i as f64 / n_grid as f64;
            let mut v = 0.5 * barrier_mev * (1.0 - (6.0 * theta).cos());
            for w in 0..6 {
                v += site_offsets_mev[w] * well_window(theta, w);
            }
            v
        })
        .collect();
    Ok(RingPotential {
        barrier_mev,
        site_offsets_mev,
        n_grid,
        values_mev,
    })
}

/// One rotational level from the numerical solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RingLevel {
    pub energy_mev: f64,
    /// Real amplitudes on the grid, normalized so sum psi^2 dtheta = 1.
    pub wavefunction: Vec<f64>,
}

/// Lowest levels of the ring Hamiltonian with localization measures.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationalSpectrum {
    pub levels: Vec<RingLevel>,
    /// Inverse participation ratio over the 6 wells, in [1/6, 1].
    pub ipr: Vec<f64>,
    pub n_grid: usize,
    pub dtheta: f64,
}

impl RotationalSpectrum {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy_mev).collect()
    }
}

/// Probability mass of a wavefunction in each of the six pi/3 well arcs.
pub fn well_masses(wavefunction: &[f64], dtheta: f64) -> [f64; 6] {
    let n = wavefunction.len();
    let mut masses = [0.0; 6];
    for (i, &psi) in wavefunction.iter().enumerate() {
        let theta = TWO_PI * i as f64 / n as f64;
        let w = ((theta / core::f64::consts::FRAC_PI_3).round() as usize) % 6;
        masses[w] += psi * psi * dtheta;
    }
    masses
}

/// Diagonalize `H = -B d^2/dtheta^2 + V(theta)` with periodic second-order
/// finite differences and return the lowest 6 levels, sorted ascending.
pub fn solve_ring(potential: &RingPotential, kinetic_scale_mev: f64) -> Result<RotationalSpectrum> {
    if kinetic_scale_mev <= 0.0 || !kinetic_scale_mev.is_finite() {
        return Err(Error::InvalidModel("kinetic scale must be positive"));
    }
    let n = potential.n_grid;
    let h = TWO_PI / n as f64;
    let diag = 2.0 * kinetic_scale_mev / (h * h);
    let off = -kinetic_scale_mev / (h * h);

    let mut ham = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        ham[(i, i)] = diag + potential.values_mev[i];
        let j = (i + 1) % n;
        ham[(i, j)] = off;
        ham[(j, i)] = off;
    }

    let eig = ham.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut levels = Vec::with_capacity(N_LEVELS);
    let mut ipr = Vec::with_capacity(N_LEVELS);
    for &idx in order.iter().take(N_LEVELS) {
        let e = eig.eigenvalues[idx];
        if !e.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "non-finite eigenvalue at level index {idx}"
            )));
        }
        let col = eig.eigenvectors.column(idx);
        let norm2: f64 = col.iter().map(|&x| x * x).sum::<f64>() * h;
        let scale = 1.0 / norm2.sqrt();
        // sign convention: largest-magnitude amplitude positive
        let mut wf: Vec<f64> = col.iter().map(|&x| x * scale).collect();
        let (mut peak, mut peak_abs) = (0.0, 0.0);
        for &x in &wf {
            if x.abs() > peak_abs {
                peak_abs = x.abs();
                peak = x;
            }
        }
        if peak < 0.0 {
            for x in &mut wf {
                *x = -*x;
            }
        }
        let masses = well_masses(&wf, h);
        ipr.push(masses.iter().map(|&p| p * p).sum());
        levels.push(RingLevel {
            energy_mev: e,
            wavefunction: wf,
        });
    }
    Ok(RotationalSpectrum {
        levels,
        ipr,
        n_grid: n,
        dtheta: h,
    })
}

/// Effective tight-binding splitting of the lowest band: (E_max - E_min) / 4
/// over the 6 lowest levels.
pub fn fitted_delta0(energies: &[f64]) -> f64 {
    let lo = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / 4.0
}

/// Localization class of one rotational level, relative to the well
/// degeneracy classes defined by the site offsets (wells with equal offsets
/// form one class).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizationClass {
    /// At least 90% of the probability mass confined to one proper class.
    Localized,
    /// No proper class exists, or every proper class holds at most 60%.
    Delocalized,
    Intermediate,
}

/// Per-level well-occupation entry of [`localization_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelLocalization {
    pub energy_mev: f64,
    pub well_masses: [f64; 6],
    pub class: LocalizationClass,
    /// Smallest well set carrying at least 90% of the mass.
    pub support: SiteSet,
}

/// Classify each level by how its probability mass distributes over the
/// degeneracy classes of wells implied by `site_offsets_mev`.
///
/// A symmetric potential has a single class (all six wells), so every level
/// is delocalized; lifted degeneracy confines eigenstates to one class of
/// equal-offset wells even though within the class they remain coherent
/// superpositions over several wells.
pub fn localization_report(
    spectrum: &RotationalSpectrum,
    site_offsets_mev: &[f64; 6],
) -> Vec<LevelLocalization> {
    // group wells by equal offset
    let mut classes: Vec<SiteSet> = Vec::new();
    let mut reps: Vec<f64> = Vec::new();
    for w in 0..6 {
        match reps
            .iter()
            .position(|&r| (r - site_offsets_mev[w]).abs() < 1e-9)
        {
            Some(c) => classes[c] = classes[c].union(SiteSet::single(w)),
            None => {
                reps.push(site_offsets_mev[w]);
                classes.push(SiteSet::single(w));
            }
        }
    }
    let proper = classes.len() > 1;

    spectrum
        .levels
        .iter()
        .map(|level| {
            let masses = well_masses(&level.wavefunction, spectrum.dtheta);
            let mut order: Vec<usize> = (0..6).collect();
            order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]));
            let mut support = SiteSet::EMPTY;
            let mut cum = 0.0;
            for &w in &order {
                support = support.union(SiteSet::single(w));
                cum += masses[w];
                if cum >= 0.9 {
                    break;
                }
            }
            let class_mass = |c: &SiteSet| -> f64 { c.iter().map(|w| masses[w]).sum() };
            let fmax = classes
                .iter()
                .map(class_mass)
                .fold(f64::NEG_INFINITY, f64::max);
            let class = if !proper || fmax <= 0.6 {
                LocalizationClass::Delocalized
            } else if fmax >= 0.9 {
                LocalizationClass::Localized
            } else {
                LocalizationClass::Intermediate
            };
            LevelLocalization {
                energy_mev: level.energy_mev,
                well_masses: masses,
                class,
                support,
            }
        })
        .collect()
}

/// Find the kinetic scale B reproducing a target tight-binding splitting for
/// the symmetric potential of the given barrier.
///
/// Bisection in log B; the fitted splitting of [`solve_ring`] is monotone in
/// B, and the returned B reproduces `target_delta0_mev` within 1%.
pub fn calibrate_kinetic_scale(barrier_mev: f64, target_delta0_mev: f64) -> Result<f64> {
    calibrate_kinetic_scale_on_grid(barrier_mev, target_delta0_mev, DEFAULT_N_GRID)
}

/// [`calibrate_kinetic_scale`] with an explicit grid size.
pub fn calibrate_kinetic_scale_on_grid(
    barrier_mev: f64,
    target_delta0_mev: f64,
    n_grid: usize,
) -> Result<f64> {
    if barrier_mev < 0.0 {
        return Err(Error::InvalidModel("barrier must be nonnegative"));
    }
    if target_delta0_mev <= 0.0 {
        return Err(Error::InvalidModel("target splitting must be positive"));
    }
    let potential = build_potential(barrier_mev, [0.0; 6], n_grid)?;
    let delta_at = |b: f64| -> Result<f64> {
        let s = solve_ring(&potential, b)?;
        Ok(fitted_delta0(&s.energies()))
    };

    let lo = 1e-4;
    let hi = 10.0_f64.max(4.0 * target_delta0_mev);
    let d_lo = delta_at(lo)?;
    let d_hi = delta_at(hi)?;
    if !(d_lo < target_delta0_mev && target_delta0_mev < d_hi) {
        return Err(Error::CalibrationFailure(format!(
            "target {target_delta0_mev} meV outside reachable range [{d_lo}, {d_hi}] meV"
        )));
    }
    let mut best = (lo * hi).sqrt();
    // log-space bisection
    let (mut llo, mut lhi) = (lo.ln(), hi.ln());
    for _ in 0..60 {
        let lmid = 0.5 * (llo + lhi);
        let b = lmid.exp();
        let d = delta_at(b)?;
        best = b;
        if (d - target_delta0_mev).abs() <= 5e-3 * target_delta0_mev {
            return Ok(b);
        }
        if d < target_delta0_mev {
            llo = lmid;
        } else {
            lhi = lmid;
        }
        if lhi - llo < 1e-12 {
            break;
        }
    }
    // accept if within the 1% contract
    let d = delta_at(best)?;
    if (d - target_delta0_mev).abs() <= 1e-2 * target_delta0_mev {
        Ok(best)
    } else {
        Err(Error::CalibrationFailure(format!(
            "bisection stalled at B = {best} meV (delta0 = {d} meV)"
        )))
    }
}
