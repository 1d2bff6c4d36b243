//! ZPL fine-structure synthesis: per-site line energies, degeneracy grouping
//! and polarizer-filtered, instrument-broadened intensity curves.

use alloc::vec::Vec;
// Float trait supplies exp/ln/sqrt on builds without std
#[allow(unused_imports)]
use num_traits::Float;

use crate::dipole::{site_gain, CollectionModel, PAIR_PROJECTED_ANGLES_DEG};
use crate::sites::{pair_of, SiteSet};
use crate::{Error, Result};

/// Default instrument lineshape FWHM (meV), Gaussian.
pub const DEFAULT_RESOLUTION_FWHM_MEV: f64 = 0.15;

/// Default degeneracy-grouping tolerance (meV), about resolution / 3.
pub const DEFAULT_GROUPING_TOL_MEV: f64 = 0.05;

/// Ground- and excited-state energies of the six interstitial sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteEnergies {
    pub gs_mev: [f64; 6],
    pub es_mev: [f64; 6],
    pub zpl_center_mev: f64,
}

/// Which adjacent-site grouping produces the two weak triplet lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripletVariant {
    /// Classes {1,2} and {4,5}.
    Adjacent,
    /// Classes {1,5} and {2,4}.
    Crossed,
}

impl SiteEnergies {
    pub fn uniform(zpl_center_mev: f64) -> SiteEnergies {
        SiteEnergies {
            gs_mev: [0.0; 6],
            es_mev: [0.0; 6],
            zpl_center_mev,
        }
    }

    /// Doublet model: sites {0,3} offset by `split_mev` in (es - gs)
    /// relative to {1,2,4,5}.
    pub fn doublet(zpl_center_mev: f64, split_mev: f64) -> SiteEnergies {
        let mut se = SiteEnergies::uniform(zpl_center_mev);
        se.es_mev[0] = split_mev;
        se.es_mev[3] = split_mev;
        se
    }

    /// Triplet model: {0,3} highest, then one adjacent-pair class, then the
    /// other at the center. `split01` separates L0 from L1, `split12`
    /// separates L1 from L2.
    pub fn triplet(
        zpl_center_mev: f64,
        split01_mev: f64,
        split12_mev: f64,
        variant: TripletVariant,
    ) -> SiteEnergies {
        let mut se = SiteEnergies::uniform(zpl_center_mev);
        se.es_mev[0] = split01_mev + split12_mev;
        se.es_mev[3] = split01_mev + split12_mev;
        let mid: [usize; 2] = match variant {
            TripletVariant::Adjacent => [1, 2],
            TripletVariant::Crossed => [1, 5],
        };
        for s in mid {
            se.es_mev[s] = split12_mev;
        }
        se
    }

    /// ZPL energy of one site: center + (es - gs).
    pub fn line_energy(&self, site: usize) -> f64 {
        self.zpl_center_mev + self.es_mev[site] - self.gs_mev[site]
    }
}

/// One emission line, possibly pooling several degenerate sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLine {
    pub energy_mev: f64,
    pub weight: f64,
    pub sites: SiteSet,
}

impl SpectralLine {
    /// Projected dipole angles (deg) of the pairs contributing to this line.
    pub fn dipole_angles_deg(&self) -> Vec<f64> {
        let mut pairs: Vec<usize> = self.sites.iter().map(pair_of).collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
            .into_iter()
            .map(|p| PAIR_PROJECTED_ANGLES_DEG[p])
            .collect()
    }
}

/// Pre-broadening line list plus the instrument resolution used to render it.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSpectrum {
    pub lines: Vec<SpectralLine>,
    pub resolution_fwhm_mev: f64,
}

impl LineSpectrum {
    pub fn total_weight(&self) -> f64 {
        self.lines.iter().map(|l| l.weight).sum()
    }
}

/// Broadened intensity vs energy on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityCurve {
    pub energy_mev: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl IntensityCurve {
    pub fn peak(&self) -> f64 {
        self.intensity.iter().cloned().fold(0.0, f64::max)
    }

    /// Linear interpolation of the curve at `e` (0 outside the grid).
    pub fn value_at(&self, e: f64) -> f64 {
        let n = self.energy_mev.len();
        if n < 2 {
            return 0.0;
        }
        let e0 = self.energy_mev[0];
        let de = self.energy_mev[1] - self.energy_mev[0];
        let x = (e - e0) / de;
        if x < 0.0 || x > (n - 1) as f64 {
            return 0.0;
        }
        let i = (x.floor() as usize).min(n - 2);
        let t = x - i as f64;
        self.intensity[i] * (1.0 - t) + self.intensity[i + 1] * t
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let n = self.energy_mev.len();
        if n < 2 {
            return 0.0;
        }
        let de = self.energy_mev[1] - self.energy_mev[0];
        let sum: f64 = self.intensity.iter().sum();
        de * (sum - 0.5 * (self.intensity[0] + self.intensity[n - 1]))
    }
}

/// Group per-site ZPL energies into emission lines.
///
/// Sites whose line energies agree within `grouping_tol_mev` merge into one
/// line with summed weight; lines are returned sorted by decreasing energy
/// (L0 first).
pub fn zpl_lines(site_energies: &SiteEnergies, grouping_tol_mev: f64) -> Result<LineSpectrum> {
    if grouping_tol_mev <= 0.0 {
        return Err(Error::InvalidModel("grouping tolerance must be positive"));
    }
    let mut per_site: Vec<(f64, usize)> = (0..6)
        .map(|n| (site_energies.line_energy(n), n))
        .collect();
    per_site.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut lines: Vec<SpectralLine> = Vec::new();
    for (e, n) in per_site {
        match lines.last_mut() {
            Some(line) if (line.energy_mev / line.weight - e).abs() <= grouping_tol_mev => {
                // energy_mev holds the weighted sum until finalized below
                line.energy_mev += e;
                line.weight += 1.0;
                line.sites = line.sites.union(SiteSet::single(n));
            }
            _ => lines.push(SpectralLine {
                energy_mev: e,
                weight: 1.0,
                sites: SiteSet::single(n),
            }),
        }
    }
    for line in &mut lines {
        line.energy_mev /= line.weight;
    }
    Ok(LineSpectrum {
        lines,
        resolution_fwhm_mev: DEFAULT_RESOLUTION_FWHM_MEV,
    })
}

/// Polarization response of one line at polarizer angle `theta` (deg):
/// sum over its sites of collection gain times the Malus factor.
pub fn line_polarization_factor(
    line: &SpectralLine,
    polarizer_deg: Option<f64>,
    collection: &CollectionModel,
) -> f64 {
    let r = collection.ratio();
    line.sites
        .iter()
        .map(|n| {
            let gain = site_gain(n, r);
            match polarizer_deg {
                Some(theta) => {
                    let d = (theta - PAIR_PROJECTED_ANGLES_DEG[pair_of(n)]).to_radians();
                    gain * d.cos().powi(2)
                }
                // no polarizer: angle-average of cos^2 is 1/2
                None => 0.5 * gain,
            }
        })
        .sum()
}

/// Render a polarizer-filtered, Gaussian-broadened spectrum.
///
/// Each line's weight is scaled by [`line_polarization_factor`]; the curve is
/// sampled on a uniform grid padded by 5 FWHM around the outermost lines.
pub fn polarized_spectrum(
    lines: &LineSpectrum,
    polarizer_deg: Option<f64>,
    collection: &CollectionModel,
) -> Result<IntensityCurve> {
    if lines.lines.is_empty() {
        return Err(Error::InvalidModel("line list is empty"));
    }
    let fwhm = lines.resolution_fwhm_mev;
    let lo = lines
        .lines
        .iter()
        .map(|l| l.energy_mev)
        .fold(f64::INFINITY, f64::min)
        - 5.0 * fwhm;
    let hi = lines
        .lines
        .iter()
        .map(|l| l.energy_mev)
        .fold(f64::NEG_INFINITY, f64::max)
        + 5.0 * fwhm;
    let de = fwhm / 20.0;
    let n = ((hi - lo) / de).ceil() as usize + 1;

    let sigma = fwhm / (8.0 * core::f64::consts::LN_2).sqrt();
    let norm = 1.0 / (sigma * (2.0 * core::f64::consts::PI).sqrt());

    let energy_mev: Vec<f64> = (0..n).map(|i| lo + i as f64 * de).collect();
    let mut intensity = alloc::vec![0.0; n];
    for line in &lines.lines {
        let amp = line.weight / line.sites.len() as f64
            * line_polarization_factor(line, polarizer_deg, collection);
        for (i, &e) in energy_mev.iter().enumerate() {
            let z = (e - line.energy_mev) / sigma;
            intensity[i] += amp * norm * (-0.5 * z * z).exp();
        }
    }
    Ok(IntensityCurve {
        energy_mev,
        intensity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipole::CollectionModel;

    const ZPL: f64 = 969.7;

    #[test]
    fn uniform_sites_merge_into_single_line() {
        let ls = zpl_lines(&SiteEnergies::uniform(ZPL), 0.05).unwrap();
        assert_eq!(ls.lines.len(), 1);
        assert_eq!(ls.lines[0].weight, 6.0);
        assert_eq!(ls.lines[0].sites, SiteSet::ALL);
    }

    #[test]
    fn doublet_pattern() {
        let ls = zpl_lines(&SiteEnergies::doublet(ZPL, 0.70), 0.05).unwrap();
        assert_eq!(ls.lines.len(), 2);
        let split = ls.lines[0].energy_mev - ls.lines[1].energy_mev;
        assert!((split - 0.70).abs() < 1e-12);
        assert_eq!(ls.lines[0].weight, 2.0);
        assert_eq!(ls.lines[0].sites, SiteSet::from_sites(&[0, 3]));
        assert_eq!(ls.lines[1].weight, 4.0);
    }

    #[test]
    fn triplet_pattern() {
        let se = SiteEnergies::triplet(ZPL, 1.00, 0.86, TripletVariant::Adjacent);
        let ls = zpl_lines(&se, 0.05).unwrap();
        assert_eq!(ls.lines.len(), 3);
        let s01 = ls.lines[0].energy_mev - ls.lines[1].energy_mev;
        let s12 = ls.lines[1].energy_mev - ls.lines[2].energy_mev;
        assert!((s01 - 1.00).abs() < 1e-12 && (s12 - 0.86).abs() < 1e-12);
        assert_eq!(ls.lines[1].sites, SiteSet::from_sites(&[1, 2]));
        assert_eq!(ls.lines[2].sites, SiteSet::from_sites(&[4, 5]));
    }

    #[test]
    fn grouping_is_associative_for_separated_clusters() {
        let se = SiteEnergies::doublet(ZPL, 0.70);
        let t = 0.02;
        let once = zpl_lines(&se, 2.0 * t).unwrap();
        let twice = zpl_lines(&se, t).unwrap();
        assert_eq!(once.lines.len(), twice.lines.len());
        for (a, b) in once.lines.iter().zip(&twice.lines) {
            assert!((a.energy_mev - b.energy_mev).abs() < 1e-12);
        }
    }

    #[test]
    fn perpendicular_polarizer_extinguishes_l0() {
        let coll = CollectionModel::with_ratio(2.1);
        let ls = zpl_lines(&SiteEnergies::doublet(ZPL, 0.70), 0.05).unwrap();
        // L0 = {0,3}, dipole at 90 deg; polarizer perpendicular (0 deg)
        let f_perp = line_polarization_factor(&ls.lines[0], Some(0.0), &coll);
        assert!(f_perp.abs() < 1e-20);
        // L1 is the same for both polarizer angles (cos^2 sum rule)
        let f1_par = line_polarization_factor(&ls.lines[1], Some(90.0), &coll);
        let f1_perp = line_polarization_factor(&ls.lines[1], Some(0.0), &coll);
        assert!((f1_par - f1_perp).abs() < 1e-12);
    }

    #[test]
    fn parallel_ratio_is_r_for_doublet() {
        let r = 2.1;
        let coll = CollectionModel::with_ratio(r);
        let ls = zpl_lines(&SiteEnergies::doublet(ZPL, 0.70), 0.05).unwrap();
        let curve = polarized_spectrum(&ls, Some(90.0), &coll).unwrap();
        let i0 = curve.value_at(ls.lines[0].energy_mev);
        let i1 = curve.value_at(ls.lines[1].energy_mev);
        // grid interpolation at off-grid line centers costs ~(de/sigma)^2
        assert!((i0 / i1 - r).abs() < 0.01, "{}", i0 / i1);
    }

    #[test]
    fn triplet_parallel_ratios_near_4_1_1() {
        let r = 2.1;
        let coll = CollectionModel::with_ratio(r);
        let se = SiteEnergies::triplet(ZPL, 1.00, 0.86, TripletVariant::Adjacent);
        let ls = zpl_lines(&se, 0.05).unwrap();
        let curve = polarized_spectrum(&ls, Some(90.0), &coll).unwrap();
        let vals: Vec<f64> = ls
            .lines
            .iter()
            .map(|l| curve.value_at(l.energy_mev))
            .collect();
        assert!((vals[0] / vals[1] - 2.0 * r).abs() < 0.05);
        assert!((vals[1] / vals[2] - 1.0).abs() < 0.01);
    }

    #[test]
    fn inclined_pair_pool_is_unpolarized() {
        let coll = CollectionModel::with_ratio(2.1);
        let line = SpectralLine {
            energy_mev: ZPL,
            weight: 4.0,
            sites: SiteSet::from_sites(&[1, 2, 4, 5]),
        };
        let f0 = line_polarization_factor(&line, Some(0.0), &coll);
        for k in 1..36 {
            let f = line_polarization_factor(&line, Some(5.0 * k as f64), &coll);
            assert!((f - f0).abs() < 1e-10);
        }
    }

    #[test]
    fn broadened_integral_matches_total_weight() {
        let coll = CollectionModel::with_ratio(2.1);
        let ls = zpl_lines(&SiteEnergies::doublet(ZPL, 0.70), 0.05).unwrap();
        // unpolarized: each site contributes gain/2; integral of the curve
        // equals sum over lines of weight * mean gain / 2
        let curve = polarized_spectrum(&ls, None, &coll).unwrap();
        let expected: f64 = ls
            .lines
            .iter()
            .map(|l| l.weight / l.sites.len() as f64 * line_polarization_factor(l, None, &coll))
            .sum();
        assert!((curve.integral() - expected).abs() / expected < 1e-3);
    }
}
