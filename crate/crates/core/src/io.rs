//! Plain-text tables and versioned JSON report documents.
//!
//! Tables are comma-separated with one header row. Lines starting with `#`
//! are comments; `# key=value` comments carry metadata. Reals are written
//! with 17 significant digits so they re-parse to the same `f64`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Estimate, Method, ResidualChecks, ResidualReport, UncertaintyVariant, WeightMode};
use crate::model::{NoiseSequence, SignalModel, Spectrum};
use crate::study::{Comparison, ReplicateReport};

pub const SPECTRUM_HEADER: [&str; 3] = ["channel", "F", "m"];
pub const NOISE_HEADER: [&str; 2] = ["channel", "bg"];

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// One column of a table.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Index(Vec<u64>),
    Real(Vec<f64>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Index(v) => v.len(),
            Column::Real(v) => v.len(),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Column::Index(v) => v[row].to_string(),
            Column::Real(v) => format_real(v[row]),
        }
    }
}

/// Writes metadata comments, a header row and the columns.
pub fn write_table<W: Write>(mut out: W, meta: &[(&str, String)], columns: &[(&str, Column)]) -> Result<()> {
    let rows = columns.first().map_or(0, |(_, c)| c.len());
    if let Some((name, c)) = columns.iter().find(|(_, c)| c.len() != rows) {
        return Err(Error::invalid("columns", format!("column `{name}` has {} rows, expected {rows}", c.len())));
    }
    for (key, value) in meta {
        writeln!(out, "# {key}={value}")?;
    }
    let header: Vec<&str> = columns.iter().map(|(name, _)| *name).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in 0..rows {
        let cells: Vec<String> = columns.iter().map(|(_, c)| c.cell(row)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// A parsed table: metadata, header and raw cells with their line numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

pub fn read_table<R: BufRead>(input: R) -> Result<Table> {
    let mut meta = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let cells: Vec<String> = trimmed.split(',').map(|c| c.trim().to_string()).collect();
        match &header {
            None => header = Some(cells),
            Some(h) => {
                if cells.len() != h.len() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {} fields, found {}", h.len(), cells.len()),
                    });
                }
                rows.push((line_no, cells));
            }
        }
    }
    let header = header.ok_or(Error::Parse {
        line: 0,
        message: "missing header row".into(),
    })?;
    Ok(Table { meta, header, rows })
}

impl Table {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        if self.header.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(Error::Parse {
                line: self.header_line(),
                message: format!("expected header `{}`, found `{}`", expected.join(","), self.header.join(",")),
            });
        }
        Ok(())
    }

    fn header_line(&self) -> usize {
        self.rows.first().map_or(1, |(l, _)| l.saturating_sub(1).max(1))
    }

    fn column_position(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or(Error::Parse {
            line: self.header_line(),
            message: format!("missing column `{name}`"),
        })
    }

    pub fn column_real(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_position(name)?;
        self.rows
            .iter()
            .map(|(line, cells)| {
                cells[j].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(Error::Parse {
                    line: *line,
                    message: format!("`{}` is not a finite number in column `{name}`", cells[j]),
                })
            })
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Result<Vec<u64>> {
        let j = self.column_position(name)?;
        self.rows
            .iter()
            .map(|(line, cells)| {
                cells[j].parse::<u64>().map_err(|_| Error::Parse {
                    line: *line,
                    message: format!("`{}` is not a non-negative integer in column `{name}`", cells[j]),
                })
            })
            .collect()
    }

    /// Checks that the `channel` column counts 0, 1, 2, ...
    fn expect_contiguous_channels(&self) -> Result<()> {
        for (expected, (got, (line, _))) in self.column_index("channel")?.into_iter().zip(&self.rows).enumerate() {
            if got != expected as u64 {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("channel {got} out of order, expected {expected}"),
                });
            }
        }
        if self.rows.is_empty() {
            return Err(Error::Parse {
                line: self.header_line(),
                message: "no channels".into(),
            });
        }
        Ok(())
    }
}

pub fn write_spectrum<W: Write>(out: W, signal: &SignalModel, spectrum: &Spectrum) -> Result<()> {
    if signal.len() != spectrum.len() {
        return Err(Error::LengthMismatch {
            what: "spectrum",
            expected: signal.len(),
            got: spectrum.len(),
        });
    }
    write_table(
        out,
        &[("signal", signal.description().replace(['\n', '\r'], " "))],
        &[
            (SPECTRUM_HEADER[0], Column::Index((0..signal.len() as u64).collect())),
            (SPECTRUM_HEADER[1], Column::Real(signal.values().to_vec())),
            (SPECTRUM_HEADER[2], Column::Real(spectrum.counts().to_vec())),
        ],
    )
}

pub fn read_spectrum<R: BufRead>(input: R) -> Result<(SignalModel, Spectrum)> {
    let table = read_table(input)?;
    table.expect_header(&SPECTRUM_HEADER)?;
    table.expect_contiguous_channels()?;
    let f = table.column_real("F")?;
    if let Some(i) = f.iter().position(|&v| v <= 0.0) {
        return Err(Error::Parse {
            line: table.rows[i].0,
            message: format!("F must be strictly positive, found {}", f[i]),
        });
    }
    let m = table.column_real("m")?;
    let description = table.meta("signal").unwrap_or("").to_string();
    Ok((SignalModel::new(f, description)?, Spectrum::new(m)?))
}

pub fn write_noise<W: Write>(out: W, noise: &NoiseSequence) -> Result<()> {
    let seed = noise.seed().map_or_else(|| "none".to_string(), |s| s.to_string());
    write_table(
        out,
        &[("seed", seed), ("standardized", noise.standardized().to_string())],
        &[
            (NOISE_HEADER[0], Column::Index((0..noise.len() as u64).collect())),
            (NOISE_HEADER[1], Column::Real(noise.values().to_vec())),
        ],
    )
}

pub fn read_noise<R: BufRead>(input: R) -> Result<NoiseSequence> {
    let table = read_table(input)?;
    table.expect_header(&NOISE_HEADER)?;
    table.expect_contiguous_channels()?;
    let seed = match table.meta("seed") {
        None | Some("none") => None,
        Some(s) => Some(s.parse::<u64>().map_err(|_| Error::Parse {
            line: 1,
            message: format!("bad seed metadata `{s}`"),
        })?),
    };
    let standardized = match table.meta("standardized") {
        None | Some("false") => false,
        Some("true") => true,
        Some(s) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("bad standardized metadata `{s}`"),
            })
        }
    };
    NoiseSequence::with_provenance(table.column_real("bg")?, seed, standardized)
}

pub const REPORT_FORMAT: &str = "modlik-report";
pub const FORMAT_VERSION: u32 = 1;

/// Where the external noise of a fit came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum NoiseSource {
    File { path: String, seed: Option<u64>, standardized: bool },
    Seed { seed: u64, standardized: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub spectrum_path: String,
    pub channels: usize,
    pub method: Method,
    pub weights: WeightMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty_variant: Option<UncertaintyVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    /// Least-squares starting value of a modified-likelihood fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ls_seed: Option<Estimate>,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub spectrum_path: String,
    /// `given` or `least_squares`.
    pub alpha_source: String,
    pub checks: ResidualChecks,
    pub warn: bool,
    pub residuals: ResidualReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportBody {
    Fit(FitReport),
    Study(ReplicateReport),
    Comparison(Comparison),
    Diagnosis(DiagnosisReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub format: String,
    pub format_version: u32,
    pub tool_version: String,
    pub report: ReportBody,
}

impl ReportDocument {
    pub fn new(report: ReportBody) -> Self {
        Self {
            format: REPORT_FORMAT.to_string(),
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            report,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.format != REPORT_FORMAT || doc.format_version != FORMAT_VERSION {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "unsupported document `{}` version {}",
                    doc.format, doc.format_version
                ),
            });
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gaussian_sequence, make_sinusoid_signal, synthesize_spectrum, SinusoidParams};

    fn sample() -> (SignalModel, NoiseSequence, Spectrum) {
        let f = make_sinusoid_signal(&SinusoidParams::default()).unwrap();
        let bg = gaussian_sequence(5, f.len(), false).unwrap();
        let m = synthesize_spectrum(&f, 1.0, &bg).unwrap();
        (f, bg, m)
    }

    #[test]
    fn spectrum_round_trip_is_exact() {
        let (f, _, m) = sample();
        let mut buf = Vec::new();
        write_spectrum(&mut buf, &f, &m).unwrap();
        let (f2, m2) = read_spectrum(buf.as_slice()).unwrap();
        assert_eq!(f2, f);
        assert_eq!(m2, m);
    }

    #[test]
    fn noise_round_trip_keeps_provenance() {
        let (_, bg, _) = sample();
        let mut buf = Vec::new();
        write_noise(&mut buf, &bg).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("# seed=5\n# standardized=false\nchannel,bg\n"));
        assert_eq!(read_noise(buf.as_slice()).unwrap(), bg);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let text = "channel,F,m\n0,1.0,2.0\n1,abc,2.0\n";
        let err = read_spectrum(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");

        let text = "channel,F,m\n0,1.0,2.0\n2,1.0,2.0\n";
        assert!(matches!(read_spectrum(text.as_bytes()), Err(Error::Parse { line: 3, .. })));

        let text = "channel,F,m\n0,1.0\n";
        assert!(matches!(read_spectrum(text.as_bytes()), Err(Error::Parse { line: 2, .. })));

        let text = "channel,F,m\n0,0.0,1.0\n";
        assert!(matches!(read_spectrum(text.as_bytes()), Err(Error::Parse { line: 2, .. })));

        let text = "channel,m,F\n0,1.0,1.0\n";
        assert!(matches!(read_spectrum(text.as_bytes()), Err(Error::Parse { .. })));

        assert!(read_spectrum("".as_bytes()).is_err());
        assert!(read_spectrum("channel,F,m\n".as_bytes()).is_err());
    }

    #[test]
    fn report_round_trip() {
        let report = crate::study::run_study(&crate::study::StudyConfig {
            replicates: 3,
            ..Default::default()
        })
        .unwrap();
        let doc = ReportDocument::new(ReportBody::Study(report));
        let text = doc.to_json().unwrap();
        assert_eq!(ReportDocument::from_json(&text).unwrap(), doc);
        assert!(text.contains("\"format_version\": 1"));
    }

    #[test]
    fn rejects_foreign_documents() {
        let (f, _, m) = sample();
        let est = crate::estimators::ls_estimate(&m, &f, WeightMode::Unit).unwrap();
        let mut doc = ReportDocument::new(ReportBody::Fit(FitReport {
            spectrum_path: "x".into(),
            channels: f.len(),
            method: Method::LeastSquares,
            weights: WeightMode::Unit,
            noise: None,
            uncertainty_variant: None,
            rel_tol: None,
            ls_seed: None,
            estimate: est,
        }));
        doc.format_version = 99;
        assert!(ReportDocument::from_json(&doc.to_json().unwrap()).is_err());
    }
}
