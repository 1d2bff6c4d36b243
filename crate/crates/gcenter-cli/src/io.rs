//! Data ingestion and artifact emission: measurement CSV loading with schema
//! validation, deterministic CSV/JSON/SVG writers and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use gcenter_core::dipole::PolarizationDiagram;
use gcenter_core::spectra::IntensityCurve;
use gcenter_core::units::nm_to_mev;
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

/// A loaded measurement file: either a spectrum or an angular diagram.
#[derive(Debug, Clone)]
pub enum Measurement {
    /// Energy-sorted spectrum (ascending meV).
    Spectrum(IntensityCurve),
    Diagram(PolarizationDiagram),
}

/// Load a two-column CSV measurement.
///
/// Accepted headers: (`wavelength_nm` | `energy_meV`) with `counts`, or
/// `angle_deg` with `intensity`. Wavelengths are converted to energies and
/// the spectrum re-sorted ascending in energy. Schema violations name the
/// offending row and column.
pub fn load_measurement(path: &Path) -> AppResult<Measurement> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);

    enum Axis {
        Wavelength,
        Energy,
        Angle,
    }
    let (axis, xcol, ycol) = if let (Some(x), Some(y)) = (col("wavelength_nm"), col("counts")) {
        (Axis::Wavelength, x, y)
    } else if let (Some(x), Some(y)) = (col("energy_meV"), col("counts")) {
        (Axis::Energy, x, y)
    } else if let (Some(x), Some(y)) = (col("angle_deg"), col("intensity")) {
        (Axis::Angle, x, y)
    } else {
        return Err(AppError::Schema(format!(
            "{}: expected columns (wavelength_nm|energy_meV, counts) or (angle_deg, intensity); found {:?}",
            path.display(),
            headers
        )));
    };

    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2; // 1-based, after the header line
        let parse = |idx: usize, name: &str| -> AppResult<f64> {
            record
                .get(idx)
                .ok_or_else(|| {
                    AppError::Schema(format!("{}: row {row}: missing column {name}", path.display()))
                })?
                .trim()
                .parse::<f64>()
                .map_err(|_| {
                    AppError::Schema(format!(
                        "{}: row {row}: column {name} is not a number",
                        path.display()
                    ))
                })
        };
        let x = parse(xcol, &headers[xcol])?;
        let y = parse(ycol, &headers[ycol])?;
        if y < 0.0 {
            return Err(AppError::Schema(format!(
                "{}: row {row}: negative value in column {}",
                path.display(),
                headers[ycol]
            )));
        }
        rows.push((x, y));
    }
    if rows.len() < 2 {
        return Err(AppError::Schema(format!(
            "{}: need at least 2 data rows",
            path.display()
        )));
    }

    match axis {
        Axis::Angle => Ok(Measurement::Diagram(PolarizationDiagram {
            samples: rows,
            fit: None,
        })),
        Axis::Wavelength | Axis::Energy => {
            if matches!(axis, Axis::Wavelength) {
                for r in &mut rows {
                    r.0 = nm_to_mev(r.0).map_err(|e| {
                        AppError::Schema(format!("{}: {e}", path.display()))
                    })?;
                }
                rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
            for (i, w) in rows.windows(2).enumerate() {
                if w[1].0 <= w[0].0 {
                    return Err(AppError::Schema(format!(
                        "{}: row {}: non-monotone energy axis",
                        path.display(),
                        i + 3
                    )));
                }
            }
            Ok(Measurement::Spectrum(IntensityCurve {
                energy_mev: rows.iter().map(|r| r.0).collect(),
                intensity: rows.iter().map(|r| r.1).collect(),
            }))
        }
    }
}

pub fn expect_spectrum(m: Measurement, path: &Path) -> AppResult<IntensityCurve> {
    match m {
        Measurement::Spectrum(c) => Ok(c),
        Measurement::Diagram(_) => Err(AppError::Schema(format!(
            "{}: expected a spectrum (energy_meV/wavelength_nm + counts), got a diagram",
            path.display()
        ))),
    }
}

/// Accumulates emitted artifacts for the manifest.
pub struct ArtifactSet {
    out_dir: PathBuf,
    entries: Vec<(String, String)>,
}

impl ArtifactSet {
    pub fn new(out_dir: &Path) -> AppResult<ArtifactSet> {
        fs::create_dir_all(out_dir)?;
        Ok(ArtifactSet {
            out_dir: out_dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    /// Write one artifact and record its checksum.
    pub fn write(&mut self, name: &str, contents: &str) -> AppResult<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)?;
        let digest = Sha256::digest(contents.as_bytes());
        self.entries.push((name.to_string(), hex(&digest)));
        Ok(path)
    }

    /// Write a CSV artifact from a header plus rows of preformatted fields.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> AppResult<PathBuf> {
        let mut out = String::new();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write(name, &out)
    }

    /// Finish the run: write `manifest.json` covering every artifact.
    pub fn finish(mut self, command: &str, config: serde_json::Value) -> AppResult<PathBuf> {
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "artifacts": self
                .entries
                .iter()
                .map(|(name, sha)| serde_json::json!({ "path": name, "sha256": sha }))
                .collect::<Vec<_>>(),
        });
        let text = format!("{:#}\n", manifest);
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, &text)?;
        self.entries.clear();
        Ok(path)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serialize a curve as a two-column CSV body.
pub fn curve_rows(curve: &IntensityCurve) -> Vec<Vec<String>> {
    curve
        .energy_mev
        .iter()
        .zip(&curve.intensity)
        .map(|(e, i)| vec![format!("{e:.6}"), format!("{i:.9}")])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_energy_spectrum() {
        let f = write_tmp("energy_meV,counts\n969.0,1.0\n969.5,2.0\n970.0,0.5\n");
        match load_measurement(f.path()).unwrap() {
            Measurement::Spectrum(c) => {
                assert_eq!(c.energy_mev.len(), 3);
                assert_eq!(c.intensity[1], 2.0);
            }
            _ => panic!("expected spectrum"),
        }
    }

    #[test]
    fn wavelength_converts_and_sorts_ascending_energy() {
        let f = write_tmp("wavelength_nm,counts\n1278.0,1.0\n1279.0,2.0\n1280.0,3.0\n");
        match load_measurement(f.path()).unwrap() {
            Measurement::Spectrum(c) => {
                assert!(c.energy_mev.windows(2).all(|w| w[1] > w[0]));
                // longest wavelength = lowest energy comes first
                assert_eq!(c.intensity[0], 3.0);
                assert!((c.energy_mev[2] - 970.14).abs() < 0.01);
            }
            _ => panic!("expected spectrum"),
        }
    }

    #[test]
    fn loads_angle_diagram() {
        let mut text = String::from("angle_deg,intensity\n");
        for k in 0..19 {
            text.push_str(&format!("{},1.0\n", 20 * k));
        }
        let f = write_tmp(&text);
        match load_measurement(f.path()).unwrap() {
            Measurement::Diagram(d) => assert_eq!(d.samples.len(), 19),
            _ => panic!("expected diagram"),
        }
    }

    #[test]
    fn schema_errors_name_row_and_column() {
        let f = write_tmp("energy_meV,counts\n969.0,1.0\n969.5,-2.0\n");
        let err = load_measurement(f.path()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.message().contains("row 3"), "{err}");
        assert!(err.message().contains("counts"), "{err}");

        let f = write_tmp("energy_meV,stuff\n969.0,1.0\n");
        let err = load_measurement(f.path()).unwrap_err();
        assert_eq!(err.exit_code(), 4);

        let f = write_tmp("energy_meV,counts\n969.0,1.0\n969.0,1.0\n");
        let err = load_measurement(f.path()).unwrap_err();
        assert!(err.message().contains("non-monotone"), "{err}");
    }

    #[test]
    fn manifest_covers_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = ArtifactSet::new(dir.path()).unwrap();
        set.write("a.csv", "x,y\n1,2\n").unwrap();
        let manifest = set.finish("test", serde_json::json!({})).unwrap();
        let parsed: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(manifest).unwrap()).unwrap();
        let arts = parsed["artifacts"].as_array().unwrap();
        assert_eq!(arts.len(), 1);
        assert_eq!(arts[0]["path"], "a.csv");
        assert_eq!(arts[0]["sha256"].as_str().unwrap().len(), 64);
    }
}
