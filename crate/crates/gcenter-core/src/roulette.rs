//! Stochastic hopping emitter: per-cycle random site selection under
//! above-bandgap excitation, photon-stream generation, polarizer-filtered
//! spectrum accumulation and g2(tau) estimation.

use alloc::vec::Vec;
// Float trait supplies exp/ln/sqrt on builds without std
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dipole::{site_gain, CollectionModel, PAIR_PROJECTED_ANGLES_DEG};
use crate::sites::pair_of;
use crate::spectra::{IntensityCurve, SiteEnergies};
use crate::units::BOLTZMANN_MEV_PER_K;
use crate::{Error, Result};

/// Two-level hopping emitter configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterConfig {
    /// Ground -> excited pumping rate (1/time unit).
    pub excitation_rate: f64,
    /// Excited -> ground radiative rate (1/time unit).
    pub radiative_rate: f64,
    pub site_energies: SiteEnergies,
    /// Probability of landing on each site at an excitation event.
    pub hop_distribution: [f64; 6],
    pub seed: u64,
    pub n_emitters: usize,
}

impl EmitterConfig {
    pub fn new(
        excitation_rate: f64,
        radiative_rate: f64,
        site_energies: SiteEnergies,
        seed: u64,
    ) -> EmitterConfig {
        EmitterConfig {
            excitation_rate,
            radiative_rate,
            site_energies,
            hop_distribution: [1.0 / 6.0; 6],
            seed,
            n_emitters: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.excitation_rate <= 0.0 || self.radiative_rate <= 0.0 {
            return Err(Error::InvalidModel("rates must be positive"));
        }
        if self.n_emitters == 0 {
            return Err(Error::InvalidModel("need at least one emitter"));
        }
        if self.hop_distribution.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidModel("hop probabilities must be nonnegative"));
        }
        let total: f64 = self.hop_distribution.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel("hop probabilities must sum to 1"));
        }
        Ok(())
    }

    /// Steady-state photon rate of one emitter.
    pub fn mean_photon_rate(&self) -> f64 {
        self.excitation_rate * self.radiative_rate
            / (self.excitation_rate + self.radiative_rate)
    }
}

/// One emitted photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonRecord {
    pub timestamp: f64,
    pub site: u8,
    pub energy_mev: f64,
    pub dipole_angle_deg: f64,
    pub emitter: u32,
}

fn exp_wait<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

fn draw_site<R: Rng>(rng: &mut R, dist: &[f64; 6]) -> u8 {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (n, &p) in dist.iter().enumerate() {
        cum += p;
        if u < cum {
            return n as u8;
        }
    }
    5
}

/// Simulate the merged photon stream of all emitters over `duration`.
///
/// Each emitter runs an independent counter-based RNG stream
/// (ChaCha, stream index = emitter id), so runs are reproducible regardless
/// of scheduling; per cycle the wait is exponential in the excitation rate,
/// the site is redrawn from the hop distribution, and the photon is emitted
/// after an exponential radiative wait. Records are merged by timestamp.
pub fn simulate_stream(config: &EmitterConfig, duration: f64) -> Result<Vec<PhotonRecord>> {
    config.validate()?;
    if duration <= 0.0 {
        return Err(Error::InvalidModel("duration must be positive"));
    }
    let mut all = Vec::new();
    for emitter in 0..config.n_emitters {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(emitter as u64 + 1);
        let mut t = 0.0;
        loop {
            t += exp_wait(&mut rng, config.excitation_rate);
            let site = draw_site(&mut rng, &config.hop_distribution);
            t += exp_wait(&mut rng, config.radiative_rate);
            if t > duration {
                break;
            }
            all.push(PhotonRecord {
                timestamp: t,
                site,
                energy_mev: config.site_energies.line_energy(site as usize),
                dipole_angle_deg: PAIR_PROJECTED_ANGLES_DEG[pair_of(site as usize)],
                emitter: emitter as u32,
            });
        }
    }
    all.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(all)
}

/// Photon counts per site.
pub fn site_histogram(stream: &[PhotonRecord]) -> [u64; 6] {
    let mut counts = [0u64; 6];
    for p in stream {
        counts[p.site as usize] += 1;
    }
    counts
}

/// Pearson chi-square statistic of the site counts against a distribution.
pub fn chi_square_statistic(counts: &[u64; 6], expected_probs: &[f64; 6]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    for (c, p) in counts.iter().zip(expected_probs) {
        let e = n as f64 * p;
        if e > 0.0 {
            stat += (*c as f64 - e).powi(2) / e;
        }
    }
    stat
}

/// 1%-significance critical value of chi-square with 5 degrees of freedom.
pub const CHI2_CRIT_5DOF_1PCT: f64 = 15.086;

/// Normalized second-order correlation estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Curve {
    /// Bin centers (time units), symmetric about 0.
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    pub bin_width: f64,
}

impl G2Curve {
    /// Value of the central (tau = 0) bin.
    pub fn at_zero(&self) -> f64 {
        self.g2[self.g2.len() / 2]
    }

    /// Mean of the bins with |tau| above a threshold.
    pub fn tail_mean(&self, min_abs_tau: f64) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (t, g) in self.tau.iter().zip(&self.g2) {
            if t.abs() >= min_abs_tau {
                sum += g;
                n += 1;
            }
        }
        sum / n as f64
    }
}

/// Coincidence histogram of the merged stream, normalized by the
/// uncorrelated-rate expectation N^2 * bin / T.
pub fn g2_histogram(stream: &[PhotonRecord], bin_width: f64, max_delay: f64) -> Result<G2Curve> {
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    if bin_width <= 0.0 || max_delay <= bin_width {
        return Err(Error::InvalidModel("need bin_width > 0 and max_delay > bin_width"));
    }
    let mut times: Vec<f64> = stream.iter().map(|p| p.timestamp).collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let span = times[n - 1] - times[0];
    if span <= 0.0 {
        return Err(Error::InvalidModel("zero-length stream"));
    }
    let half_bins = (max_delay / bin_width).floor() as usize;
    let n_bins = 2 * half_bins + 1;
    // scan up to the outer edge of the last bin so edge bins fill fully
    let cutoff = (half_bins as f64 + 0.5) * bin_width;
    let mut counts = alloc::vec![0u64; n_bins];
    for i in 0..n {
        for j in (i + 1)..n {
            let dt = times[j] - times[i];
            if dt > cutoff {
                break;
            }
            let k = (dt / bin_width + 0.5).floor() as usize;
            if k <= half_bins {
                counts[half_bins + k] += 1;
                counts[half_bins - k] += 1;
            }
        }
    }
    let norm = (n as f64).powi(2) * bin_width / span;
    let tau: Vec<f64> = (0..n_bins)
        .map(|b| (b as f64 - half_bins as f64) * bin_width)
        .collect();
    let g2: Vec<f64> = counts.iter().map(|&c| c as f64 / norm).collect();
    Ok(G2Curve {
        tau,
        g2,
        bin_width,
    })
}

/// Accumulate a polarizer-filtered, broadened spectrum from a photon stream.
///
/// The polarizer is applied as Bernoulli thinning with acceptance probability
/// proportional to `gain * cos^2(theta - dipole angle)` (photon-level Malus
/// law); `None` detects every photon with its angle-averaged weight.
pub fn accumulate_spectrum(
    stream: &[PhotonRecord],
    polarizer_deg: Option<f64>,
    collection: &CollectionModel,
    resolution_fwhm_mev: f64,
    seed: u64,
) -> Result<IntensityCurve> {
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let r = collection.ratio();
    let p_max = r.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX); // keep thinning decoupled from emitter streams

    let mut accepted: Vec<f64> = Vec::new();
    for photon in stream {
        let gain = site_gain(photon.site as usize, r);
        let malus = match polarizer_deg {
            Some(theta) => (theta - photon.dipole_angle_deg).to_radians().cos().powi(2),
            None => 0.5,
        };
        let p = gain * malus / p_max;
        if rng.gen::<f64>() < p {
            accepted.push(photon.energy_mev);
        }
    }
    if accepted.is_empty() {
        return Err(Error::EmptyStream);
    }

    let lo_line = accepted.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_line = accepted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let fwhm = resolution_fwhm_mev;
    let lo = lo_line - 5.0 * fwhm;
    let hi = hi_line + 5.0 * fwhm;
    let de = fwhm / 20.0;
    let n = ((hi - lo) / de).ceil() as usize + 1;
    let mut hist = alloc::vec![0.0f64; n];
    for e in &accepted {
        let k = ((e - lo) / de).round() as usize;
        hist[k.min(n - 1)] += 1.0;
    }

    // convolve with the normalized Gaussian kernel, truncated at 5 sigma
    let sigma = fwhm / (8.0 * core::f64::consts::LN_2).sqrt();
    let norm = de / (sigma * (2.0 * core::f64::consts::PI).sqrt());
    let half = (5.0 * sigma / de).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|k| {
            let z = k as f64 * de / sigma;
            norm * (-0.5 * z * z).exp()
        })
        .collect();
    let mut intensity = alloc::vec![0.0f64; n];
    for (i, &c) in hist.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (kk, &w) in kernel.iter().enumerate() {
            let j = i as isize + kk as isize - half;
            if (0..n as isize).contains(&j) {
                intensity[j as usize] += c * w / de;
            }
        }
    }
    let energy_mev: Vec<f64> = (0..n).map(|i| lo + i as f64 * de).collect();
    Ok(IntensityCurve {
        energy_mev,
        intensity,
    })
}

/// Thermal-hopping classification of the hopping mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoppingRegime {
    ThermallyFrozen,
    ThermallyActivated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub regime: HoppingRegime,
    pub thermal_energy_mev: f64,
}

/// Compare k_B T against the rotation barriers: thermal hopping is frozen
/// when k_B T < 0.1 * min(barriers).
pub fn hopping_regime_check(
    temperature_k: f64,
    barrier_gs_mev: f64,
    barrier_es_mev: f64,
) -> Result<RegimeReport> {
    if temperature_k <= 0.0 {
        return Err(Error::InvalidModel("temperature must be positive"));
    }
    let kbt = temperature_k * BOLTZMANN_MEV_PER_K;
    let regime = if kbt < 0.1 * barrier_gs_mev.min(barrier_es_mev) {
        HoppingRegime::ThermallyFrozen
    } else {
        HoppingRegime::ThermallyActivated
    };
    Ok(RegimeReport {
        regime,
        thermal_energy_mev: kbt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(seed: u64) -> EmitterConfig {
        EmitterConfig::new(1.0, 1.0, SiteEnergies::doublet(969.7, 0.70), seed)
    }

    #[test]
    fn stream_deterministic_and_sorted() {
        let mut cfg = base_config(7);
        cfg.n_emitters = 3;
        let a = simulate_stream(&cfg, 500.0).unwrap();
        let b = simulate_stream(&cfg, 500.0).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        // per-emitter timestamps strictly increasing
        for e in 0..3u32 {
            let mut last = 0.0;
            for p in a.iter().filter(|p| p.emitter == e) {
                assert!(p.timestamp > last);
                last = p.timestamp;
            }
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = simulate_stream(&base_config(1), 100.0).unwrap();
        let b = simulate_stream(&base_config(2), 100.0).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn frozen_site_when_distribution_is_a_point_mass() {
        let mut cfg = base_config(3);
        cfg.hop_distribution = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let stream = simulate_stream(&cfg, 1000.0).unwrap();
        assert!(!stream.is_empty());
        assert!(stream.iter().all(|p| p.site == 0));
    }

    #[test]
    fn site_frequencies_uniform() {
        let cfg = base_config(11);
        let stream = simulate_stream(&cfg, 300_000.0).unwrap();
        let counts = site_histogram(&stream);
        let n: u64 = counts.iter().sum();
        assert!(n > 100_000);
        let p = 1.0 / 6.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for &c in &counts {
            let f = c as f64 / n as f64;
            assert!((f - p).abs() < 3.0 * sigma, "site freq {f}");
        }
        let stat = chi_square_statistic(&counts, &[p; 6]);
        assert!(stat < CHI2_CRIT_5DOF_1PCT, "chi2 = {stat}");
    }

    #[test]
    fn mean_rate_matches_two_state_markov() {
        let mut cfg = base_config(5);
        cfg.excitation_rate = 2.0;
        cfg.radiative_rate = 0.5;
        let duration = 200_000.0;
        let stream = simulate_stream(&cfg, duration).unwrap();
        let rate = stream.len() as f64 / duration;
        let expect = cfg.mean_photon_rate();
        assert!((rate - expect).abs() / expect < 0.02, "rate {rate} vs {expect}");
    }

    #[test]
    fn single_emitter_antibunched() {
        let cfg = base_config(21);
        let stream = simulate_stream(&cfg, 100_000.0).unwrap();
        let g2 = g2_histogram(&stream, 0.05, 10.0).unwrap();
        assert!(g2.at_zero() < 0.5, "g2(0) = {}", g2.at_zero());
        assert!((g2.tail_mean(5.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn two_emitters_at_half() {
        let mut cfg = base_config(22);
        cfg.n_emitters = 2;
        let stream = simulate_stream(&cfg, 200_000.0).unwrap();
        let g2 = g2_histogram(&stream, 0.05, 10.0).unwrap();
        assert!((g2.at_zero() - 0.5).abs() < 0.05, "g2(0) = {}", g2.at_zero());
    }

    #[test]
    fn poissonian_surrogate_is_flat() {
        // uncorrelated surrogate: uniform iid timestamps
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut stream: Vec<PhotonRecord> = (0..60_000)
            .map(|_| PhotonRecord {
                timestamp: rng.gen::<f64>() * 120_000.0,
                site: 0,
                energy_mev: 969.7,
                dipole_angle_deg: 90.0,
                emitter: 0,
            })
            .collect();
        stream.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        let g2 = g2_histogram(&stream, 0.5, 20.0).unwrap();
        for (t, g) in g2.tau.iter().zip(&g2.g2) {
            assert!((g - 1.0).abs() < 0.05, "g2({t}) = {g}");
        }
    }

    #[test]
    fn thermal_regime_thresholds() {
        let r = hopping_regime_check(30.0, 89.0, 33.0).unwrap();
        assert_eq!(r.regime, HoppingRegime::ThermallyFrozen);
        assert!((r.thermal_energy_mev - 2.59).abs() < 0.01);
        assert_eq!(
            hopping_regime_check(3000.0, 89.0, 33.0).unwrap().regime,
            HoppingRegime::ThermallyActivated
        );
        assert_eq!(
            hopping_regime_check(30.0, 0.1, 0.1).unwrap().regime,
            HoppingRegime::ThermallyActivated
        );
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = base_config(1);
        cfg.hop_distribution = [0.5, 0.5, 0.5, 0.0, 0.0, 0.0];
        assert!(simulate_stream(&cfg, 10.0).is_err());
        let mut cfg = base_config(1);
        cfg.excitation_rate = 0.0;
        assert!(simulate_stream(&cfg, 10.0).is_err());
        assert!(g2_histogram(&[], 0.1, 1.0).is_err());
    }
}
