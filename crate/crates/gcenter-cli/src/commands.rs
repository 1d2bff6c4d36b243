//! One function per subcommand. Each returns the JSON report it wrote so the
//! dispatcher can echo the effective configuration into the manifest.

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use gcenter_core::dipole::{
    collection_ratio, dipoles_for_axis, fit_diagram, CollectionModel,
};
use gcenter_core::fitting::{classify_defect, DefectMeasurement};
use gcenter_core::nalgebra::Vector3;
use gcenter_core::pes::{
    build_potential, calibrate_kinetic_scale_on_grid, fitted_delta0, localization_report,
    solve_ring, DEFAULT_N_GRID,
};
use gcenter_core::rotor::{quartet_spectrum, Level, RotorModel};
use gcenter_core::roulette::{
    accumulate_spectrum, chi_square_statistic, g2_histogram, simulate_stream, site_histogram,
    EmitterConfig, CHI2_CRIT_5DOF_1PCT,
};
use gcenter_core::sites::SiteSet;
use gcenter_core::spectra::{
    polarized_spectrum, zpl_lines, LineSpectrum, SiteEnergies, TripletVariant,
    DEFAULT_GROUPING_TOL_MEV, DEFAULT_RESOLUTION_FWHM_MEV,
};
use gcenter_core::strain::{distinct_line_count, ensemble_lines, StrainSpec};
use gcenter_core::units::{mev_to_ghz, mev_to_uev, uev_to_mev};

use crate::error::{AppError, AppResult};
use crate::io::{curve_rows, expect_spectrum, load_measurement, ArtifactSet, Measurement};
use crate::svg::{line_plot, Series};

/// Parse a Miller-index direction like "110", "-110" or "1-10".
pub fn parse_miller(s: &str) -> AppResult<Vector3<f64>> {
    let mut components = Vec::new();
    let mut sign = 1.0;
    for ch in s.chars() {
        match ch {
            '-' => sign = -sign,
            '0'..='9' => {
                components.push(sign * ch.to_digit(10).unwrap() as f64);
                sign = 1.0;
            }
            '[' | ']' | ' ' => {}
            _ => {
                return Err(AppError::Usage(format!(
                    "invalid Miller direction {s:?}"
                )))
            }
        }
    }
    if components.len() != 3 {
        return Err(AppError::Usage(format!(
            "Miller direction {s:?} must have 3 indices"
        )));
    }
    let v = Vector3::new(components[0], components[1], components[2]);
    if v.norm() == 0.0 {
        return Err(AppError::Usage(format!("Miller direction {s:?} is zero")));
    }
    Ok(v)
}

fn line_rows(ls: &LineSpectrum) -> Vec<Vec<String>> {
    ls.lines
        .iter()
        .map(|l| {
            vec![
                format!("{:.9}", l.energy_mev),
                format!("{:.9}", l.weight),
                format!("{}", l.sites),
            ]
        })
        .collect()
}

fn spectrum_svg(title: &str, curve: &gcenter_core::spectra::IntensityCurve) -> String {
    let pts: Vec<(f64, f64)> = curve
        .energy_mev
        .iter()
        .cloned()
        .zip(curve.intensity.iter().cloned())
        .collect();
    line_plot(
        title,
        "energy (meV)",
        "intensity (arb.)",
        &[Series {
            label: "spectrum",
            points: &pts,
        }],
    )
}

// ---------------------------------------------------------------- quartet --

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct QuartetParams {
    /// Excited-state tunneling coupling (ueV).
    #[arg(long = "delta-es-uev", default_value_t = 2.5)]
    pub delta_es_uev: f64,
    /// Ground-state tunneling coupling (ueV).
    #[arg(long = "delta-gs-uev", default_value_t = 0.0)]
    pub delta_gs_uev: f64,
    /// ZPL center energy (meV).
    #[arg(long = "zpl-mev", default_value_t = 969.7)]
    pub zpl_mev: f64,
}

pub fn run_quartet(p: &QuartetParams, arts: &mut ArtifactSet) -> AppResult<serde_json::Value> {
    let gs = RotorModel::new(0.0, uev_to_mev(p.delta_gs_uev), 1.0, Level::GroundState)?;
    let es = RotorModel::new(0.0, uev_to_mev(p.delta_es_uev), 1.0, Level::ExcitedState)?;
    let mut ls = quartet_spectrum(&gs, &es, p.zpl_mev)?;

    arts.write_csv(
        "lines.csv",
        &["energy_meV", "weight", "sites"],
        &line_rows(&ls),
    )?;

    let delta_mev = (es.delta0_mev - gs.delta0_mev).abs();
    let splittings_uev: Vec<f64> = ls
        .lines
        .windows(2)
        .map(|w| mev_to_uev(w[0].energy_mev - w[1].energy_mev))
        .collect();

    if delta_mev > 0.0 {
        // resolution below the splitting so the quartet renders resolved
        ls.resolution_fwhm_mev = 0.5 * delta_mev;
    }
    let curve = polarized_spectrum(&ls, None, &CollectionModel::with_ratio(1.0))?;
    arts.write_csv("spectrum.csv", &["energy_meV", "intensity"], &curve_rows(&curve))?;
    arts.write("spectrum.svg", &spectrum_svg("rotational quartet", &curve))?;

    let report = json!({
        "zpl_center_meV": p.zpl_mev,
        "delta_meV": delta_mev,
        "delta_GHz": mev_to_ghz(delta_mev),
        "lines_meV": ls.lines.iter().map(|l| l.energy_mev).collect::<Vec<_>>(),
        "weights": ls.lines.iter().map(|l| l.weight).collect::<Vec<_>>(),
        "splittings_ueV": splittings_uev,
    });
    arts.write("report.json", &format!("{report:#}\n"))?;
    Ok(report)
}

// -------------------------------------------------------------------- pes --

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PesParams {
    /// Rotation barrier height (meV).
    #[arg(long = "barrier-mev", default_value_t = 33.0)]
    pub barrier_mev: f64,
    /// Kinetic scale B (meV); calibrated from the target splitting if absent.
    #[arg(long = "kinetic-mev")]
    pub kinetic_mev: Option<f64>,
    /// Calibration target for the tight-binding splitting (ueV).
    #[arg(long = "target-delta-uev", default_value_t = 2.5)]
    pub target_delta_uev: f64,
    /// Offset added to wells {0,3} (meV), e.g. from [-110] strain.
    #[arg(long = "offset03-mev", default_value_t = 0.0)]
    pub offset03_mev: f64,
    /// Angular grid size (multiple of 6).
    #[arg(long = "n-grid", default_value_t = DEFAULT_N_GRID)]
    pub n_grid: usize,
}

pub fn run_pes(p: &PesParams, arts: &mut ArtifactSet) -> AppResult<serde_json::Value> {
    let kinetic = match p.kinetic_mev {
        Some(b) => b,
        None => calibrate_kinetic_scale_on_grid(
            p.barrier_mev,
            uev_to_mev(p.target_delta_uev),
            p.n_grid,
        )?,
    };
    let mut offsets = [0.0; 6];
    offsets[0] = p.offset03_mev;
    offsets[3] = p.offset03_mev;
    let potential = build_potential(p.barrier_mev, offsets, p.n_grid)?;
    let spectrum = solve_ring(&potential, kinetic)?;
    let report_entries = localization_report(&spectrum, &offsets);

    let pot_rows: Vec<Vec<String>> = potential
        .values_mev
        .iter()
        .enumerate()
        .map(|(i, v)| vec![format!("{:.6}", potential.theta(i)), format!("{v:.9}")])
        .collect();
    arts.write_csv("potential.csv", &["theta_rad", "V_meV"], &pot_rows)?;

    let level_rows: Vec<Vec<String>> = report_entries
        .iter()
        .zip(&spectrum.ipr)
        .enumerate()
        .map(|(i, (entry, ipr))| {
            let mut row = vec![
                format!("{i}"),
                format!("{:.9}", entry.energy_mev),
                format!("{ipr:.6}"),
                format!("{:?}", entry.class),
                format!("{}", entry.support),
            ];
            row.extend(entry.well_masses.iter().map(|m| format!("{m:.6}")));
            row
        })
        .collect();
    arts.write_csv(
        "levels.csv",
        &[
            "level", "energy_meV", "ipr", "class", "support", "mass_w0", "mass_w1", "mass_w2",
            "mass_w3", "mass_w4", "mass_w5",
        ],
        &level_rows,
    )?;

    let pot_pts: Vec<(f64, f64)> = potential
        .values_mev
        .iter()
        .enumerate()
        .map(|(i, &v)| (potential.theta(i), v))
        .collect();
    arts.write(
        "potential.svg",
        &line_plot(
            "rotational potential",
            "theta (rad)",
            "V (meV)",
            &[Series {
                label: "V",
                points: &pot_pts,
            }],
        ),
    )?;

    let energies = spectrum.energies();
    let report = json!({
        "barrier_meV": p.barrier_mev,
        "kinetic_scale_meV": kinetic,
        "offset03_meV": p.offset03_mev,
        "n_grid": p.n_grid,
        "energies_meV": energies,
        "fitted_delta0_ueV": mev_to_uev(fitted_delta0(&energies)),
        "levels": report_entries.iter().map(|e| json!({
            "energy_meV": e.energy_mev,
            "class": format!("{:?}", e.class),
            "support": format!("{}", e.support),
            "well_masses": e.well_masses.to_vec(),
        })).collect::<Vec<_>>(),
    });
    arts.write("report.json", &format!("{report:#}\n"))?;
    Ok(report)
}

// ---------------------------------------------------------------- diagram --

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DiagramParams {
    /// Occupied sites: "all" or a comma list like "0,3".
    #[arg(long, default_value = "all")]
    pub sites: String,
    /// In-plane/inclined collection ratio; overrides --depth-nm.
    #[arg(long)]
    pub r: Option<f64>,
    /// Emitter depth in the silicon layer (nm) for the collection table.
    #[arg(long = "depth-nm")]
    pub depth_nm: Option<f64>,
    /// Defect axis (Miller direction).
    #[arg(long, default_value = "111")]
    pub axis: String,
    /// Angular step (deg).
    #[arg(long = "step-deg", default_value_t = 5.0)]
    pub step_deg: f64,
    /// Fit a measured diagram (CSV: angle_deg,intensity) instead of
    /// synthesizing one from the site model.
    #[arg(long)]
    pub data: Option<std::path::PathBuf>,
}

fn parse_sites(s: &str) -> AppResult<SiteSet> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(SiteSet::ALL);
    }
    let mut set = SiteSet::EMPTY;
    for tok in s.split(',') {
        let n: usize = tok
            .trim()
            .parse()
            .map_err(|_| AppError::Usage(format!("invalid site {tok:?}")))?;
        if n > 5 {
            return Err(AppError::Usage(format!("site {n} out of range 0..=5")));
        }
        set = set.union(SiteSet::single(n));
    }
    if set.is_empty() {
        return Err(AppError::Usage("empty site list".into()));
    }
    Ok(set)
}

fn resolve_collection(r: Option<f64>, depth_nm: Option<f64>) -> AppResult<CollectionModel> {
    match (r, depth_nm) {
        (Some(r), _) => Ok(CollectionModel::with_ratio(r)),
        (None, Some(d)) => Ok(collection_ratio(d)?),
        (None, None) => Ok(CollectionModel::with_ratio(2.1)),
    }
}

pub fn run_diagram(p: &DiagramParams, arts: &mut ArtifactSet) -> AppResult<serde_json::Value> {
    let sites = parse_sites(&p.sites)?;
    let coll = resolve_collection(p.r, p.depth_nm)?;
    let diagram = match &p.data {
        Some(path) => match load_measurement(path)? {
            Measurement::Diagram(d) => d,
            Measurement::Spectrum(_) => {
                return Err(AppError::Schema(format!(
                    "{}: expected a diagram (angle_deg, intensity), got a spectrum",
                    path.display()
                )))
            }
        },
        None => {
            let geometry = dipoles_for_axis(parse_miller(&p.axis)?)?;
            if p.step_deg <= 0.0 || p.step_deg > 20.0 {
                return Err(AppError::Usage("step-deg must be in (0, 20]".into()));
            }
            let n = (180.0 / p.step_deg).ceil() as usize;
            let angles: Vec<f64> = (0..n).map(|k| k as f64 * p.step_deg).collect();
            gcenter_core::dipole::diagram_from_sites_at(&geometry, sites, &[1.0; 6], &coll, &angles)?
        }
    };
    let fit = fit_diagram(&diagram)?;

    let rows: Vec<Vec<String>> = diagram
        .samples
        .iter()
        .map(|&(a, i)| vec![format!("{a:.3}"), format!("{i:.9}")])
        .collect();
    arts.write_csv("diagram.csv", &["angle_deg", "intensity"], &rows)?;
    arts.write(
        "diagram.svg",
        &line_plot(
            "polarization emission diagram",
            "polarizer angle (deg)",
            "intensity (arb.)",
            &[Series {
                label: "I",
                points: &diagram.samples,
            }],
        ),
    )?;

    let report = json!({
        "sites": format!("{sites}"),
        "collection_ratio": coll.ratio(),
        "visibility": fit.visibility,
        "orientation_deg": fit.orientation_deg,
        "orientation_defined": fit.orientation_defined,
        "visibility_sigma": fit.visibility_sigma,
        "orientation_sigma_deg": fit.orientation_sigma_deg,
    });
    arts.write("report.json", &format!("{report:#}\n"))?;
    Ok(report)
}

// --------------------------------------------------------------- spectrum --

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectrumParams {
    /// Fine-structure model: uniform | doublet | triplet.
    #[arg(long, default_value = "doublet")]
    pub model: String,
    /// Doublet splitting (meV).
    #[arg(long = "split-mev", default_value_t = 0.70)]
    pub split_mev: f64,
    /// Triplet L0-L1 splitting (meV).
    #[arg(long = "split01-mev", default_value_t = 1.00)]
    pub split01_mev: f64,
    /// Triplet L1-L2 splitting (meV).
    #[arg(long = "split12-mev", default_value_t = 0.86)]
    pub split12_mev: f64,
    /// Triplet variant: adjacent | crossed.
    #[arg(long, default_value = "adjacent")]
    pub variant: String,
    /// ZPL center energy (meV).
    #[arg(long = "zpl-mev", default_value_t = 969.7)]
    pub zpl_mev: f64,
    /// Polarizer angle (deg); omit for unpolarized detection.
    #[arg(long = "polarizer-deg")]
    pub polarizer_deg: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long = "depth-nm")]
    pub depth_nm: Option<f64>,
    /// Instrument resolution FWHM (meV).
    #[arg(long = "fwhm-mev", default_value_t = DEFAULT_RESOLUTION_FWHM_MEV)]
    pub fwhm_mev: f64,
}

pub fn site_energies_for_model(p: &SpectrumParams) -> AppResult<SiteEnergies> {
    match p.model.as_str() {
        "uniform" => Ok(SiteEnergies::uniform(p.zpl_mev)),
        "doublet" => Ok(SiteEnergies::doublet(p.zpl_mev, p.split_mev)),
        "triplet" => {
            let variant = match p.variant.as_str() {
                "adjacent" => TripletVariant::Adjacent,
                "crossed" => TripletVariant::Crossed,
                other => {
                    return Err(AppError::Usage(format!(
                        "unknown triplet variant {other:?} (adjacent|crossed)"
                    )))
                }
            };
            Ok(SiteEnergies::triplet(
                p.zpl_mev,
                p.split01_mev,
                p.split12_mev,
                variant,
            ))
        }
        other => Err(AppError::Usage(format!(
            "unknown model {other:?} (uniform|doublet|triplet)"
        ))),
    }
}

pub fn run_spectrum(p: &SpectrumParams, arts: &mut ArtifactSet) -> AppResult<serde_json::Value> {
    let se = site_energies_for_model(p)?;
    let coll = resolve_collection(p.r, p.depth_nm)?;
    let mut ls = zpl_lines(&se, DEFAULT_GROUPING_TOL_MEV)?;
    ls.resolution_fwhm_mev = p.fwhm_mev;
    let curve = polarized_spectrum(&ls, p.polarizer_deg, &coll)?;

    arts.write_csv(
        "lines.csv",
        &["energy_meV", "weight", "sites"],
        &line_rows(&ls),
    )?;
    arts.write_csv("spectrum.csv", &["energy_meV", "intensity"], &curve_rows(&curve))?;
    arts.write("spectrum.svg", &spectrum_svg("ZPL fine structure", &curve))?;

    let report = json!({
        "model": p.model,
        "polarizer_deg": p.polarizer_deg,
        "collection_ratio": coll.ratio(),
        "lines_meV": ls.lines.iter().map(|l| l.energy_mev).collect::<Vec<_>>(),
        "peak_intensities": ls.lines.iter().map(|l| curve.value_at(l.energy_mev)).collect::<Vec<_>>(),
    });
    arts.write("report.json", &format!("{report:#}\n"))?;
    Ok(report)
}

// --------------------------------------------------------------- ensemble --

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EnsembleParams {
    /// Strain direction (Miller), e.g. 110, 001, 111.
    #[arg(long = "strain-dir", default_value = "110")]
    pub strain_dir: String,
    /// Strain magnitude (dimensionless), e.g. 0.001 = 0.1%.
    #[arg(long, default_value_t = 0.001)]
    pub strain: f64,
    /// Tolerance for counting distinct lines (meV).
    #[arg(long = "tol-mev", default_value_t = 1e-6)]
    pub tol_mev: f64,
}

pub fn run_ensemble(p: &EnsembleParams, arts: &mut ArtifactSet) -> AppResult<serde_json::Value> {
    let strain = StrainSpec::new(parse_miller(&p.strain_dir)?, p.strain)?;
    let families = ensemble_lines(&strain)?;
    let count = distinct_line_count(&families, p.tol_mev);

    let mut rows = Vec::new();
    for f in &families {
        for e in &f.line_offsets_mev {
            rows.push(vec![
                f.orientation.clone(),
                f.class.label().to_string(),
                format!("{e:.9}"),
            ]);
        }
    }
    arts.write_csv(
        "ensemble.csv",
        &["orientation", "class", "line_offset_meV"],
        &rows,
    )?;

    let report = json!({
        "strain_dir": p.strain_dir,
        "strain": p.strain,
        "distinct_lines": count,
        "families": families.iter().map(|f| json!({
            "orientation": f.orientation,
            "class": f.class.label(),
            "line_offsets_meV": f.line_offsets_mev,
        })).collect::<Vec<_>>(),
    });
    arts.write("report.json", &format!("{report:#}\n"))?;
    Ok(report)
}

// --------------------------------------------------------------- roulette --

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RouletteParams {
    #[command(flatten)]
    #[serde(flatten)]
    pub spectrum: SpectrumParams,
    /// Target number of emitted photons.
    #[arg(long, default_value_t = 1_000_000)]
    pub photons: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub emitters: usize,
    /// Excitation (pump) rate, 1/time unit.
    #[arg(long = "excitation-rate", default_value_t = 1.0)]
    pub excitation_rate: f64,
    /// Radiative decay rate, 1/time unit.
    #[arg(long = "radiative-rate", default_value_t = 1.0)]
    pub radiative_rate: f64,
}

fn emitter_config(p: &RouletteParams) -> AppResult<(EmitterConfig, f64)> {
    let se = site_energies_for_model(&p.spectrum)?;
    let mut cfg = EmitterConfig::new(p.excitation_rate, p.radiative_rate, se, p.seed);
    cfg.n_emitters = p.emitters;
    let duration = p.photons as f64 / (cfg.mean_photon_rate() * p.emitters as f64);
    Ok((cfg, duration))
}

pub fn run_roulette(p: &RouletteParams, arts: &mut ArtifactSet) -> AppResult<serde_json::Value> {
    let (cfg, duration) = emitter_config(p)?;
    let coll = resolve_collection(p.spectrum.r, p.spectrum.depth_nm)?;
    let stream = simulate_stream(&cfg, duration)?;
    let counts = site_histogram(&stream);
    let chi2 = chi_square_statistic(&counts, &cfg.hop_distribution);

    let curve = accumulate_spectrum(
        &stream,
        p.spectrum.polarizer_deg,
        &coll,
        p.spectrum.fwhm_mev,
        p.seed,
    )?;

    let count_rows: Vec<Vec<String>> = counts
        .iter()
        .enumerate()
        .map(|(n, c)| vec![format!("{n}"), format!("{c}")])
        .collect();
    arts.write_csv("site_counts.csv", &["site", "photons"], &count_rows)?;
    arts.write_csv("spectrum.csv", &["energy_meV", "intensity"], &curve_rows(&curve))?;
    arts.write("spectrum.svg", &spectrum_svg("accumulated spectrum", &curve))?;

    let ls = zpl_lines(&site_energies_for_model(&p.spectrum)?, DEFAULT_GROUPING_TOL_MEV)?;
    let report = json!({
        "photons": stream.len(),
        "duration": duration,
        "emitters": p.emitters,
        "seed": p.seed,
        "site_counts": counts.to_vec(),
        "chi_square": chi2,
        "chi_square_critical_1pct": CHI2_CRIT_5DOF_1PCT,
        "uniform_at_1pct": chi2 < CHI2_CRIT_5DOF_1PCT,
        "polarizer_deg": p.spectrum.polarizer_deg,
        "line_peak_intensities": ls.lines.iter()
            .map(|l| curve.value_at(l.energy_mev))
            .collect::<Vec<_>>(),
        "lines_meV": ls.lines.iter().map(|l| l.energy_mev).collect::<Vec<_>>(),
    });
    arts.write("report.json", &format!("{report:#}\n"))?;
    Ok(report)
}

// --------------------------------------------------------------------- g2 --

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct G2Params {
    #[arg(long, default_value_t = 200_000)]
    pub photons: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub emitters: usize,
    #[arg(long = "excitation-rate", default_value_t = 1.0)]
    pub excitation_rate: f64,
    #[arg(long = "radiative-rate", default_value_t = 1.0)]
    pub radiative_rate: f64,
    /// Histogram bin width (time units).
    #[arg(long = "bin", default_value_t = 0.05)]
    pub bin: f64,
    /// Histogram half-range (time units).
    #[arg(long = "max-delay", default_value_t = 10.0)]
    pub max_delay: f64,
}

pub fn run_g2(p: &G2Params, arts: &mut ArtifactSet) -> AppResult<serde_json::Value> {
    let se = SiteEnergies::uniform(969.7);
    let mut cfg = EmitterConfig::new(p.excitation_rate, p.radiative_rate, se, p.seed);
    cfg.n_emitters = p.emitters;
    let duration = p.photons as f64 / (cfg.mean_photon_rate() * p.emitters as f64);
    let stream = simulate_stream(&cfg, duration)?;
    let g2 = g2_histogram(&stream, p.bin, p.max_delay)?;

    let rows: Vec<Vec<String>> = g2
        .tau
        .iter()
        .zip(&g2.g2)
        .map(|(t, g)| vec![format!("{t:.6}"), format!("{g:.9}")])
        .collect();
    arts.write_csv("g2.csv", &["tau", "g2"], &rows)?;
    let pts: Vec<(f64, f64)> = g2.tau.iter().cloned().zip(g2.g2.iter().cloned()).collect();
    arts.write(
        "g2.svg",
        &line_plot(
            "second-order correlation",
            "delay tau (time units)",
            "g2(tau)",
            &[Series {
                label: "g2",
                points: &pts,
            }],
        ),
    )?;

    let report = json!({
        "photons": stream.len(),
        "emitters": p.emitters,
        "seed": p.seed,
        "bin": p.bin,
        "max_delay": p.max_delay,
        "g2_zero": g2.at_zero(),
        "g2_tail_mean": g2.tail_mean(0.5 * p.max_delay),
        "single_emitter_certified": g2.at_zero() < 0.5,
    });
    arts.write("report.json", &format!("{report:#}\n"))?;
    Ok(report)
}

// --------------------------------------------------------------- classify --

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClassifyParams {
    /// CSV spectrum with the polarizer parallel to the in-plane dipole.
    #[arg(long)]
    pub parallel: std::path::PathBuf,
    /// CSV spectrum with the polarizer perpendicular.
    #[arg(long)]
    pub perpendicular: std::path::PathBuf,
    /// Optional CSV spectrum with the polarizer at 45 deg.
    #[arg(long)]
    pub diagonal: Option<std::path::PathBuf>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long = "depth-nm")]
    pub depth_nm: Option<f64>,
    #[arg(long = "max-peaks", default_value_t = 4)]
    pub max_peaks: usize,
    /// Also consider partitions that break the n -> n+3 site symmetry.
    #[arg(long = "allow-pair-splitting", default_value_t = false)]
    pub allow_pair_splitting: bool,
}

pub fn run_classify(p: &ClassifyParams, arts: &mut ArtifactSet) -> AppResult<serde_json::Value> {
    let parallel = expect_spectrum(load_measurement(&p.parallel)?, &p.parallel)?;
    let perpendicular = expect_spectrum(load_measurement(&p.perpendicular)?, &p.perpendicular)?;
    let diagonal = match &p.diagonal {
        Some(path) => Some(expect_spectrum(load_measurement(path)?, path)?),
        None => None,
    };
    let coll = resolve_collection(p.r, p.depth_nm)?;
    let measurement = DefectMeasurement {
        parallel,
        perpendicular,
        diagonal,
    };
    let report_data = classify_defect(&measurement, &coll, p.max_peaks, p.allow_pair_splitting)?;

    let report = json!({
        "collection_ratio": coll.ratio(),
        "thresholds": {
            "tie_margin": "best * 1.05 + 1e-9",
            "contrast_weight": 4.0,
            "max_peaks": p.max_peaks,
            "allow_pair_splitting": p.allow_pair_splitting,
        },
        "peaks": report_data.peaks.iter().map(|pk| json!({
            "center_meV": pk.center_mev,
            "amplitude": pk.amplitude,
            "fwhm_meV": pk.fwhm_mev(),
            "area": pk.area(),
        })).collect::<Vec<_>>(),
        "splits_meV": report_data.splits_mev,
        "line_contrast": report_data.line_contrast,
        "n_tied": report_data.n_tied,
        "candidates": report_data.candidates.iter().take(8).map(|c| json!({
            "classes": c.hypothesis.classes.iter().map(|s| format!("{s}")).collect::<Vec<_>>(),
            "score": c.score,
            "predicted_fractions": c.predicted_fractions,
            "predicted_contrast": c.predicted_contrast,
        })).collect::<Vec<_>>(),
    });
    arts.write("report.json", &format!("{report:#}\n"))?;
    Ok(report)
}

// -------------------------------------------------------------- calibrate --

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CalibrateParams {
    #[arg(long = "barrier-mev", default_value_t = 33.0)]
    pub barrier_mev: f64,
    #[arg(long = "target-delta-uev", default_value_t = 2.5)]
    pub target_delta_uev: f64,
    #[arg(long = "n-grid", default_value_t = DEFAULT_N_GRID)]
    pub n_grid: usize,
}

pub fn run_calibrate(p: &CalibrateParams, arts: &mut ArtifactSet) -> AppResult<serde_json::Value> {
    let target = uev_to_mev(p.target_delta_uev);
    let b = calibrate_kinetic_scale_on_grid(p.barrier_mev, target, p.n_grid)?;
    let potential = build_potential(p.barrier_mev, [0.0; 6], p.n_grid)?;
    let achieved = fitted_delta0(&solve_ring(&potential, b)?.energies());
    let report = json!({
        "barrier_meV": p.barrier_mev,
        "target_delta0_ueV": p.target_delta_uev,
        "n_grid": p.n_grid,
        "kinetic_scale_meV": b,
        "achieved_delta0_ueV": mev_to_uev(achieved),
    });
    arts.write("report.json", &format!("{report:#}\n"))?;
    Ok(report)
}
