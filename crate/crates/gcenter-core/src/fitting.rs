//! Peak fitting and site-class inference: multi-Gaussian least squares with
//! BIC model selection, and enumeration of symmetry-allowed site partitions
//! scored against polarization-resolved spectra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
// Float trait supplies exp/ln/sqrt on builds without std
#[allow(unused_imports)]
use num_traits::Float;

use crate::dipole::{site_gain, CollectionModel, PAIR_PROJECTED_ANGLES_DEG};
use crate::sites::{pair_of, SiteSet};
use crate::spectra::IntensityCurve;
use crate::{Error, Result};

/// One fitted Gaussian component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedPeak {
    pub center_mev: f64,
    pub amplitude: f64,
    pub sigma_mev: f64,
}

impl FittedPeak {
    pub fn area(&self) -> f64 {
        self.amplitude * self.sigma_mev * (2.0 * core::f64::consts::PI).sqrt()
    }

    pub fn fwhm_mev(&self) -> f64 {
        self.sigma_mev * (8.0 * core::f64::consts::LN_2).sqrt()
    }
}

/// Result of multi-Gaussian fitting with model selection.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakFit {
    /// Components sorted by decreasing center energy.
    pub peaks: Vec<FittedPeak>,
    pub rss: f64,
    pub bic: f64,
}

fn model_and_jacobian(
    params: &[f64],
    x: &[f64],
    residual: &mut DVector<f64>,
    jac: &mut DMatrix<f64>,
    y: &[f64],
) {
    let k = params.len() / 3;
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        let mut f = 0.0;
        for p in 0..k {
            let (a, mu, sg) = (params[3 * p], params[3 * p + 1], params[3 * p + 2].abs());
            let z = (xi - mu) / sg;
            let g = (-0.5 * z * z).exp();
            f += a * g;
            jac[(i, 3 * p)] = g;
            jac[(i, 3 * p + 1)] = a * g * z / sg;
            jac[(i, 3 * p + 2)] = a * g * z * z / sg;
        }
        residual[i] = yi - f;
    }
}

fn rss_of(params: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let k = params.len() / 3;
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let mut f = 0.0;
            for p in 0..k {
                let (a, mu, sg) = (params[3 * p], params[3 * p + 1], params[3 * p + 2].abs());
                let z = (xi - mu) / sg;
                f += a * (-0.5 * z * z).exp();
            }
            (yi - f).powi(2)
        })
        .sum()
}

/// Levenberg-Marquardt refinement of a k-Gaussian model.
fn lm_refine(params: &mut [f64], x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    let np = params.len();
    let mut residual = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, np);
    let mut lambda = 1e-3;
    let mut rss = rss_of(params, x, y);
    for _ in 0..200 {
        model_and_jacobian(params, x, &mut residual, &mut jac, y);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &residual;
        let mut improved = false;
        for _ in 0..20 {
            let mut damped = jtj.clone();
            for d in 0..np {
                damped[(d, d)] += lambda * (jtj[(d, d)].max(1e-12));
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let trial_rss = rss_of(&trial, x, y);
            if trial_rss < rss {
                params.copy_from_slice(&trial);
                let gain = (rss - trial_rss) / rss.max(1e-300);
                rss = trial_rss;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if gain < 1e-12 {
                    return Ok(rss);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(rss)
}

/// Pick the next initial guess from the residual maximum, estimating sigma
/// from the half-maximum width around it.
fn seed_peak(x: &[f64], resid: &[f64]) -> FittedPeak {
    let (mut i0, mut rmax) = (0usize, f64::NEG_INFINITY);
    for (i, &r) in resid.iter().enumerate() {
        if r > rmax {
            rmax = r;
            i0 = i;
        }
    }
    let de = x[1] - x[0];
    let half = rmax / 2.0;
    let mut left = i0;
    while left > 0 && resid[left] > half {
        left -= 1;
    }
    let mut right = i0;
    while right + 1 < resid.len() && resid[right] > half {
        right += 1;
    }
    let fwhm = ((right - left) as f64 * de).max(2.0 * de);
    FittedPeak {
        center_mev: x[i0],
        amplitude: rmax.max(1e-12),
        sigma_mev: fwhm / (8.0 * core::f64::consts::LN_2).sqrt(),
    }
}

/// Fit 1..=max_peaks Gaussians and keep the component count with the lowest
/// Bayesian information criterion.
pub fn fit_peaks(curve: &IntensityCurve, max_peaks: usize) -> Result<PeakFit> {
    let x = &curve.energy_mev;
    let y = &curve.intensity;
    if x.len() < 10 || x.len() != y.len() {
        return Err(Error::InsufficientData("need at least 10 samples"));
    }
    if max_peaks == 0 || 3 * max_peaks >= x.len() {
        return Err(Error::InvalidModel("bad component count"));
    }
    let n = x.len() as f64;
    let mut best: Option<PeakFit> = None;
    let mut params: Vec<f64> = Vec::new();
    for k in 1..=max_peaks {
        let resid: Vec<f64> = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| yi - eval_params(&params, xi))
            .collect();
        let seed = seed_peak(x, &resid);
        params.extend_from_slice(&[seed.amplitude, seed.center_mev, seed.sigma_mev]);
        let rss = lm_refine(&mut params, x, y)
            .map_err(|_| Error::FitFailure("refinement failed".into()))?;
        let bic = n * (rss / n).max(1e-300).ln() + (3 * k) as f64 * n.ln();
        if best.as_ref().is_none_or(|b| bic < b.bic) {
            let mut peaks: Vec<FittedPeak> = params
                .chunks(3)
                .map(|c| FittedPeak {
                    center_mev: c[1],
                    amplitude: c[0],
                    sigma_mev: c[2].abs(),
                })
                .collect();
            peaks.sort_by(|a, b| b.center_mev.total_cmp(&a.center_mev));
            best = Some(PeakFit { peaks, rss, bic });
        }
    }
    best.ok_or_else(|| Error::FitFailure("no model converged".into()))
}

fn eval_params(params: &[f64], xi: f64) -> f64 {
    params
        .chunks(3)
        .map(|c| {
            let z = (xi - c[1]) / c[2].abs();
            c[0] * (-0.5 * z * z).exp()
        })
        .sum()
}

/// An ordered assignment of site classes to emission lines (index 0 is the
/// highest-energy line).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentHypothesis {
    pub classes: Vec<SiteSet>,
}

impl AssignmentHypothesis {
    /// Predicted intensity of each line through a polarizer along the
    /// in-plane dipole axis (90 deg from the reference).
    pub fn predicted_parallel(&self, r: f64) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| c.iter().map(|n| site_response(n, r, 90.0)).sum())
            .collect()
    }

    /// Predicted parallel/perpendicular contrast of each line.
    pub fn predicted_contrast(&self, r: f64) -> Vec<f64> {
        self.contrast_in_basis(r, 90.0, 0.0)
    }

    /// Predicted 45/135-degree contrast, separating single-dipole inclined
    /// classes (full contrast) from mixed inclined classes (none).
    pub fn predicted_diagonal_contrast(&self, r: f64) -> Vec<f64> {
        self.contrast_in_basis(r, 45.0, 135.0)
    }

    fn contrast_in_basis(&self, r: f64, a_deg: f64, b_deg: f64) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| {
                let ia: f64 = c.iter().map(|n| site_response(n, r, a_deg)).sum();
                let ib: f64 = c.iter().map(|n| site_response(n, r, b_deg)).sum();
                (ia - ib) / (ia + ib).max(1e-300)
            })
            .collect()
    }

    /// Canonical, order-independent key of the underlying partition.
    pub fn partition_key(&self) -> Vec<u8> {
        let mut key: Vec<u8> = self.classes.iter().map(|c| c.mask()).collect();
        key.sort_unstable();
        key
    }
}

fn site_response(site: usize, r: f64, polarizer_deg: f64) -> f64 {
    let d = (polarizer_deg - PAIR_PROJECTED_ANGLES_DEG[pair_of(site)]).to_radians();
    site_gain(site, r) * d.cos().powi(2)
}

fn shift_by_3(s: SiteSet) -> SiteSet {
    s.shifted_by_3()
}

/// All partitions of the six sites into exactly `n_classes` nonempty classes.
///
/// By default only partitions invariant under the half-turn n -> n + 3 are
/// kept (classes map onto classes); `allow_pair_splitting` lifts the filter.
pub fn enumerate_assignments(n_classes: usize, allow_pair_splitting: bool) -> Vec<AssignmentHypothesis> {
    let mut out = Vec::new();
    if n_classes == 0 || n_classes > 6 {
        return out;
    }
    // restricted growth strings enumerate set partitions exactly once
    let mut rgs = [0usize; 6];
    loop {
        let k = rgs.iter().max().unwrap() + 1;
        if k == n_classes {
            let mut classes = alloc::vec![SiteSet::EMPTY; k];
            for (n, &c) in rgs.iter().enumerate() {
                classes[c] = classes[c].union(SiteSet::single(n));
            }
            let invariant = classes
                .iter()
                .all(|&c| classes.contains(&shift_by_3(c)));
            if invariant || allow_pair_splitting {
                for perm in permutations(k) {
                    out.push(AssignmentHypothesis {
                        classes: perm.iter().map(|&i| classes[i]).collect(),
                    });
                }
            }
        }
        // next restricted growth string
        let mut i = 5;
        loop {
            let cap = rgs[..i].iter().max().unwrap() + 1;
            if rgs[i] < cap {
                rgs[i] += 1;
                for r in rgs[i + 1..].iter_mut() {
                    *r = 0;
                }
                break;
            }
            if i == 1 {
                return out;
            }
            i -= 1;
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    heap_permute(&mut idx, k, &mut out);
    out
}

fn heap_permute(idx: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(idx.clone());
        return;
    }
    for i in 0..k {
        heap_permute(idx, k - 1, out);
        if k % 2 == 0 {
            idx.swap(i, k - 1);
        } else {
            idx.swap(0, k - 1);
        }
    }
}

/// Polarization-resolved input for site-class inference.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectMeasurement {
    /// Spectrum with the polarizer along the in-plane dipole axis.
    pub parallel: IntensityCurve,
    /// Spectrum with the polarizer rotated by 90 deg.
    pub perpendicular: IntensityCurve,
    /// Optional spectrum at 45 deg; resolves the inclined-pair ambiguity
    /// (both inclined dipoles lie at 45/135 deg, invisible to the other two
    /// orientations).
    pub diagonal: Option<IntensityCurve>,
}

/// One candidate assignment with its score and predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredAssignment {
    pub hypothesis: AssignmentHypothesis,
    pub score: f64,
    pub predicted_fractions: Vec<f64>,
    pub predicted_contrast: Vec<f64>,
}

/// Classification output: fitted lines plus ranked assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    /// Parallel-spectrum components, highest energy first.
    pub peaks: Vec<FittedPeak>,
    /// Energy gaps between consecutive components (meV).
    pub splits_mev: Vec<f64>,
    /// Measured (par - perp) / (par + perp) at each component center.
    pub line_contrast: Vec<f64>,
    /// Candidates sorted by ascending score, one per distinct partition.
    pub candidates: Vec<ScoredAssignment>,
    /// Number of leading partitions within 5% of the best score.
    pub n_tied: usize,
}

impl ClassificationReport {
    pub fn best(&self) -> &ScoredAssignment {
        &self.candidates[0]
    }
}

/// Contrast mismatch weight in the assignment score.
const CONTRAST_WEIGHT: f64 = 4.0;

/// Infer which site classes produce each emission line.
///
/// Fits the parallel spectrum with up to `max_peaks` Gaussians, measures the
/// per-line polarization contrast against the perpendicular spectrum (and, if
/// present, the 45/135 contrast via the diagonal spectrum and the sum rule
/// I45 + I135 = Ipar + Iperp), then scores every symmetry-allowed assignment
/// by squared error in normalized line intensities plus weighted squared
/// error in contrast. Candidates are reported per partition: orderings of the
/// same partition collapse to the best-scoring one.
pub fn classify_defect(
    measurement: &DefectMeasurement,
    collection: &CollectionModel,
    max_peaks: usize,
    allow_pair_splitting: bool,
) -> Result<ClassificationReport> {
    let fit = fit_peaks(&measurement.parallel, max_peaks)?;
    let r = collection.ratio();

    let mut measured: Vec<f64> = fit.peaks.iter().map(FittedPeak::area).collect();
    let total: f64 = measured.iter().sum();
    if total <= 0.0 {
        return Err(Error::FitFailure("nonpositive total intensity".into()));
    }
    for m in &mut measured {
        *m /= total;
    }
    let line_contrast: Vec<f64> = fit
        .peaks
        .iter()
        .map(|p| {
            let par = measurement.parallel.value_at(p.center_mev);
            let perp = measurement.perpendicular.value_at(p.center_mev);
            (par - perp) / (par + perp).max(1e-300)
        })
        .collect();
    // (I45 - I135)/(I45 + I135) with I45 + I135 = Ipar + Iperp
    let diag_contrast: Option<Vec<f64>> = measurement.diagonal.as_ref().map(|diag| {
        fit.peaks
            .iter()
            .map(|p| {
                let total = measurement.parallel.value_at(p.center_mev)
                    + measurement.perpendicular.value_at(p.center_mev);
                let i45 = diag.value_at(p.center_mev);
                (2.0 * i45 - total) / total.max(1e-300)
            })
            .collect()
    });

    let mut candidates: Vec<ScoredAssignment> = Vec::new();
    for hyp in enumerate_assignments(fit.peaks.len(), allow_pair_splitting) {
        let mut pred = hyp.predicted_parallel(r);
        let psum: f64 = pred.iter().sum();
        for p in &mut pred {
            *p /= psum.max(1e-300);
        }
        let contrast = hyp.predicted_contrast(r);
        let mut score = 0.0;
        for i in 0..measured.len() {
            score += (measured[i] - pred[i]).powi(2);
            score += CONTRAST_WEIGHT * (contrast[i] - line_contrast[i]).powi(2);
        }
        if let Some(dm) = &diag_contrast {
            let dp = hyp.predicted_diagonal_contrast(r);
            for i in 0..measured.len() {
                score += CONTRAST_WEIGHT * (dp[i] - dm[i]).powi(2);
            }
        }
        candidates.push(ScoredAssignment {
            hypothesis: hyp,
            score,
            predicted_fractions: pred,
            predicted_contrast: contrast,
        });
    }
    if candidates.is_empty() {
        return Err(Error::InsufficientData("no symmetry-allowed assignment"));
    }
    candidates.sort_by(|a, b| a.score.total_cmp(&b.score));
    // orderings of one partition are redundant; keep each partition's best
    let mut seen: Vec<Vec<u8>> = Vec::new();
    candidates.retain(|c| {
        let key = c.hypothesis.partition_key();
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });
    let cutoff = candidates[0].score * 1.05 + 1e-9;
    let n_tied = candidates.iter().take_while(|c| c.score <= cutoff).count();

    let splits_mev: Vec<f64> = fit
        .peaks
        .windows(2)
        .map(|w| w[0].center_mev - w[1].center_mev)
        .collect();
    Ok(ClassificationReport {
        peaks: fit.peaks,
        splits_mev,
        line_contrast,
        candidates,
        n_tied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{polarized_spectrum, zpl_lines, SiteEnergies, TripletVariant};

    const ZPL: f64 = 969.7;

    fn synth(se: &SiteEnergies, polarizer_deg: f64, r: f64) -> IntensityCurve {
        let coll = CollectionModel::with_ratio(r);
        let ls = zpl_lines(se, 0.05).unwrap();
        polarized_spectrum(&ls, Some(polarizer_deg), &coll).unwrap()
    }

    #[test]
    fn single_gaussian_recovered_exactly() {
        let sigma = 0.0637;
        let x: Vec<f64> = (0..400).map(|i| 968.0 + i as f64 * 0.01).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&e| 3.0 * (-0.5 * ((e - ZPL) / sigma).powi(2)).exp())
            .collect();
        let fit = fit_peaks(&IntensityCurve { energy_mev: x, intensity: y }, 3).unwrap();
        assert_eq!(fit.peaks.len(), 1);
        let p = fit.peaks[0];
        assert!((p.center_mev - ZPL).abs() < 1e-6);
        assert!((p.amplitude - 3.0).abs() < 1e-6);
        assert!((p.sigma_mev - sigma).abs() < 1e-6);
    }

    #[test]
    fn doublet_centers_and_bic_count() {
        let curve = synth(&SiteEnergies::doublet(ZPL, 0.70), 90.0, 2.1);
        let fit = fit_peaks(&curve, 4).unwrap();
        assert_eq!(fit.peaks.len(), 2);
        let split = fit.peaks[0].center_mev - fit.peaks[1].center_mev;
        assert!((split - 0.70).abs() < 0.01, "split {split}");
    }

    #[test]
    fn triplet_centers_and_bic_count() {
        let se = SiteEnergies::triplet(ZPL, 1.00, 0.86, TripletVariant::Adjacent);
        let curve = synth(&se, 90.0, 2.1);
        let fit = fit_peaks(&curve, 5).unwrap();
        assert_eq!(fit.peaks.len(), 3);
        assert!((fit.peaks[0].center_mev - fit.peaks[1].center_mev - 1.00).abs() < 0.02);
        assert!((fit.peaks[1].center_mev - fit.peaks[2].center_mev - 0.86).abs() < 0.02);
    }

    #[test]
    fn enumeration_contains_symmetric_partitions_only() {
        let hyps = enumerate_assignments(2, false);
        let doublet = AssignmentHypothesis {
            classes: alloc::vec![SiteSet::from_sites(&[0, 3]), SiteSet::from_sites(&[1, 2, 4, 5])],
        };
        assert!(hyps.contains(&doublet));
        let broken = AssignmentHypothesis {
            classes: alloc::vec![SiteSet::from_sites(&[0, 1]), SiteSet::from_sites(&[2, 3, 4, 5])],
        };
        assert!(!hyps.contains(&broken));
        assert!(enumerate_assignments(2, true).contains(&broken));
    }

    #[test]
    fn enumeration_keeps_swap_symmetric_triplets() {
        let hyps = enumerate_assignments(3, false);
        let adjacent = AssignmentHypothesis {
            classes: alloc::vec![
                SiteSet::from_sites(&[0, 3]),
                SiteSet::from_sites(&[1, 2]),
                SiteSet::from_sites(&[4, 5]),
            ],
        };
        let crossed = AssignmentHypothesis {
            classes: alloc::vec![
                SiteSet::from_sites(&[0, 3]),
                SiteSet::from_sites(&[1, 5]),
                SiteSet::from_sites(&[2, 4]),
            ],
        };
        assert!(hyps.contains(&adjacent) && hyps.contains(&crossed));
    }

    #[test]
    fn classify_doublet_round_trip() {
        let se = SiteEnergies::doublet(ZPL, 0.70);
        let m = DefectMeasurement {
            parallel: synth(&se, 90.0, 2.1),
            perpendicular: synth(&se, 0.0, 2.1),
            diagonal: None,
        };
        let coll = CollectionModel::with_ratio(2.1);
        let report = classify_defect(&m, &coll, 4, false).unwrap();
        assert_eq!(report.n_tied, 1);
        assert_eq!(
            report.best().hypothesis.classes,
            alloc::vec![SiteSet::from_sites(&[0, 3]), SiteSet::from_sites(&[1, 2, 4, 5])]
        );
        assert!((report.splits_mev[0] - 0.70).abs() < 0.02);
    }

    #[test]
    fn classify_triplet_reports_both_symmetric_pairings() {
        let se = SiteEnergies::triplet(ZPL, 1.00, 0.86, TripletVariant::Adjacent);
        let m = DefectMeasurement {
            parallel: synth(&se, 90.0, 2.1),
            perpendicular: synth(&se, 0.0, 2.1),
            diagonal: Some(synth(&se, 45.0, 2.1)),
        };
        let coll = CollectionModel::with_ratio(2.1);
        let report = classify_defect(&m, &coll, 4, false).unwrap();
        // exactly the two swap-symmetric pairings of {1,2,4,5} survive; the
        // diagonal spectrum rules out the single-dipole pairing {1,4}|{2,5}
        assert_eq!(report.n_tied, 2);
        let tied = &report.candidates[..report.n_tied];
        for c in tied {
            assert_eq!(c.hypothesis.classes[0], SiteSet::from_sites(&[0, 3]));
        }
        let mids: Vec<_> = tied
            .iter()
            .map(|c| c.hypothesis.partition_key())
            .collect();
        let adjacent = AssignmentHypothesis {
            classes: alloc::vec![
                SiteSet::from_sites(&[0, 3]),
                SiteSet::from_sites(&[1, 2]),
                SiteSet::from_sites(&[4, 5]),
            ],
        };
        let crossed = AssignmentHypothesis {
            classes: alloc::vec![
                SiteSet::from_sites(&[0, 3]),
                SiteSet::from_sites(&[1, 5]),
                SiteSet::from_sites(&[2, 4]),
            ],
        };
        assert!(mids.contains(&adjacent.partition_key()));
        assert!(mids.contains(&crossed.partition_key()));
        // anything beyond the tie set scores clearly worse
        assert!(report.candidates[report.n_tied].score > 2.0 * tied[0].score.max(1e-6));
    }

    #[test]
    fn classify_triplet_without_diagonal_keeps_pair_class_tie() {
        let se = SiteEnergies::triplet(ZPL, 1.00, 0.86, TripletVariant::Adjacent);
        let m = DefectMeasurement {
            parallel: synth(&se, 90.0, 2.1),
            perpendicular: synth(&se, 0.0, 2.1),
            diagonal: None,
        };
        let coll = CollectionModel::with_ratio(2.1);
        let report = classify_defect(&m, &coll, 4, false).unwrap();
        // {1,4}|{2,5} is indistinguishable with only two orientations
        assert_eq!(report.n_tied, 3);
    }

    #[test]
    fn contrast_prediction_matches_geometry() {
        let hyp = AssignmentHypothesis {
            classes: alloc::vec![SiteSet::from_sites(&[0, 3]), SiteSet::from_sites(&[1, 2, 4, 5])],
        };
        let c = hyp.predicted_contrast(2.1);
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!(c[1].abs() < 1e-12);
    }

    #[test]
    fn degenerate_input_rejected() {
        let c = IntensityCurve {
            energy_mev: alloc::vec![0.0; 4],
            intensity: alloc::vec![0.0; 4],
        };
        assert!(fit_peaks(&c, 2).is_err());
    }
}
