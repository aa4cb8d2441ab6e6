//! JSON experiment specs: parsing, validation, execution and CSV output.
//!
//! A spec describes one sweep. Parsing keeps going after the first range
//! problem so that every violation is reported at once.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, MeanSnrConvention, SystemConfig};
use crate::error::Result;
use crate::montecarlo::{
    diversity_order, fit_diversity, run_ber_point, run_outage_point, within_probability_window,
    BerOptions, BerPoint, CurvePoint, DiversityFit, OutagePoint,
};
use crate::selection::Strategy;

pub const CSV_HEADER: &str = "snr_db,strategy,trials,errors,value,ci_low,ci_high";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Ber,
    Outage,
    Diversity,
    SnrCheck,
    Protocol,
}

impl Mode {
    const ALL: [(&'static str, Mode); 5] = [
        ("ber", Mode::Ber),
        ("outage", Mode::Outage),
        ("diversity", Mode::Diversity),
        ("snr-check", Mode::SnrCheck),
        ("protocol", Mode::Protocol),
    ];

    pub fn as_str(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, m)| *m == self)
            .map_or("?", |(s, _)| s)
    }

    fn parse(s: &str) -> Option<Mode> {
        Self::ALL
            .iter()
            .find(|(name, _)| *name == s)
            .map(|(_, m)| *m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Transmit SNR `E_s` in dB; every link scales with it.
    TransmitSnrDb,
    /// Mean direct-link SNR in dB with both relay links held at
    /// `relay_link_mean_snr_db`.
    DirectLinkMeanSnrDb,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Mean SNR of the SR and RD links for the direct-link axis.
    pub relay_link_mean_snr_db: Option<f64>,
    /// Transmit SNR used with the direct-link axis.
    pub transmit_snr_db: f64,
    pub mean_snr_convention: MeanSnrConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub mode: Option<Mode>,
    pub system: SystemConfig,
    pub strategies: Vec<Strategy>,
    pub sweep: Sweep,
    pub trials: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub gamma0: f64,
    pub ber: BerOptions,
    /// SNR range (dB) used by the diversity fit.
    pub window_db: Option<(f64, f64)>,
    /// Probability range used by the diversity fit when no SNR window is set.
    pub fit_probability_window: (f64, f64),
}

impl ExperimentSpec {
    /// System configuration at one sweep value.
    pub fn point_config(&self, value_db: f64) -> SystemConfig {
        let s = &self.system;
        match self.sweep.axis {
            SweepAxis::TransmitSnrDb => s.with_snr(db_to_linear(value_db)),
            SweepAxis::DirectLinkMeanSnrDb => {
                let relay_db = self.sweep.relay_link_mean_snr_db.unwrap_or(0.0);
                SystemConfig::from_mean_link_snrs(
                    s.n_s,
                    s.n_r,
                    s.n_d,
                    [value_db, relay_db, relay_db],
                    db_to_linear(self.sweep.transmit_snr_db),
                    self.sweep.mean_snr_convention,
                )
            }
        }
    }
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecError {
    /// Not valid JSON, or a value of the wrong type.
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed but out of range.
    Invalid(Vec<Diagnostic>),
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::Malformed {
                line,
                column,
                message,
            } => {
                write!(f, "line {line}, column {column}: {message}")
            }
            SpecError::Invalid(diags) => {
                for (n, d) in diags.iter().enumerate() {
                    if n > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{d}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for SpecError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n_s: Option<i64>,
    n_r: Option<i64>,
    n_d: Option<i64>,
    lambda_sd: Option<f64>,
    lambda_sr: Option<f64>,
    lambda_rd: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Option<String>,
    values: Option<Vec<f64>>,
    relay_link_mean_snr_db: Option<f64>,
    transmit_snr_db: Option<f64>,
    mean_snr_convention: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    mode: Option<String>,
    system: Option<RawSystem>,
    strategies: Option<Vec<String>>,
    sweep: Option<RawSweep>,
    trials: Option<i64>,
    seed: Option<u64>,
    output: Option<String>,
    gamma0: Option<f64>,
    symbols_per_block: Option<i64>,
    early_stop_errors: Option<i64>,
    window_db: Option<[f64; 2]>,
    fit_probability_window: Option<[f64; 2]>,
}

struct Collector<'a> {
    text: &'a str,
    diags: Vec<Diagnostic>,
}

impl Collector<'_> {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        let key = field.rsplit('.').next().unwrap_or(field);
        let needle = format!("\"{key}\"");
        let line = self
            .text
            .lines()
            .position(|l| l.contains(&needle))
            .map(|n| n + 1);
        self.diags.push(Diagnostic {
            field: field.to_string(),
            line,
            message: message.into(),
        });
    }

    fn count(&mut self, field: &str, v: Option<i64>) -> usize {
        match v {
            None => {
                self.push(field, "required");
                1
            }
            Some(n) if n < 1 => {
                self.push(field, format!("must be at least 1, got {n}"));
                1
            }
            Some(n) => n as usize,
        }
    }

    fn positive(&mut self, field: &str, v: Option<f64>, default: f64) -> f64 {
        let x = v.unwrap_or(default);
        if !(x > 0.0) || !x.is_finite() {
            self.push(field, format!("must be positive and finite, got {x}"));
            return default;
        }
        x
    }
}

/// Parses and validates spec text.
pub fn parse_spec(text: &str) -> std::result::Result<ExperimentSpec, SpecError> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| SpecError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut c = Collector {
        text,
        diags: Vec::new(),
    };

    let mode = match raw.mode.as_deref() {
        None => None,
        Some(m) => {
            let parsed = Mode::parse(m);
            if parsed.is_none() {
                c.push(
                    "mode",
                    format!("unknown mode '{m}', expected one of: ber, outage, diversity, snr-check, protocol"),
                );
            }
            parsed
        }
    };

    let system = match raw.system {
        None => {
            c.push("system", "required");
            SystemConfig::new(1, 1, 1, 1.0)
        }
        Some(s) => SystemConfig {
            n_s: c.count("system.n_s", s.n_s),
            n_r: c.count("system.n_r", s.n_r),
            n_d: c.count("system.n_d", s.n_d),
            lambda_sd: c.positive("system.lambda_sd", s.lambda_sd, 1.0),
            lambda_sr: c.positive("system.lambda_sr", s.lambda_sr, 1.0),
            lambda_rd: c.positive("system.lambda_rd", s.lambda_rd, 1.0),
            snr: 1.0,
        },
    };

    let mut strategies = Vec::new();
    match raw.strategies {
        None => c.push("strategies", "required"),
        Some(list) if list.is_empty() => c.push("strategies", "must list at least one strategy"),
        Some(list) => {
            for name in list {
                match name.parse::<Strategy>() {
                    Ok(s) if strategies.contains(&s) => {
                        c.push("strategies", format!("'{name}' listed twice"))
                    }
                    Ok(s) => strategies.push(s),
                    Err(_) => c.push(
                        "strategies",
                        format!(
                            "unknown strategy '{name}', allowed: {}",
                            Strategy::allowed_list()
                        ),
                    ),
                }
            }
        }
    }

    let sweep = match raw.sweep {
        None => {
            c.push("sweep", "required");
            None
        }
        Some(s) => {
            let axis = match s.axis.as_deref() {
                Some("transmit-snr-db") => Some(SweepAxis::TransmitSnrDb),
                Some("direct-link-mean-snr-db") => Some(SweepAxis::DirectLinkMeanSnrDb),
                Some(other) => {
                    c.push(
                        "sweep.axis",
                        format!("unknown axis '{other}', expected transmit-snr-db or direct-link-mean-snr-db"),
                    );
                    None
                }
                None => {
                    c.push("sweep.axis", "required");
                    None
                }
            };
            let values = s.values.unwrap_or_default();
            if values.is_empty() {
                c.push("sweep.values", "must contain at least one value");
            } else if values.iter().any(|v| !v.is_finite()) {
                c.push("sweep.values", "values must be finite");
            } else if values.windows(2).any(|w| w[1] <= w[0]) {
                c.push("sweep.values", "values must be strictly increasing");
            }
            if axis == Some(SweepAxis::DirectLinkMeanSnrDb) {
                match s.relay_link_mean_snr_db {
                    None => c.push(
                        "sweep.relay_link_mean_snr_db",
                        "required for the direct-link-mean-snr-db axis",
                    ),
                    Some(v) if !v.is_finite() => {
                        c.push("sweep.relay_link_mean_snr_db", "must be finite")
                    }
                    Some(_) => {}
                }
            }
            let transmit_snr_db = s.transmit_snr_db.unwrap_or(0.0);
            if !transmit_snr_db.is_finite() {
                c.push("sweep.transmit_snr_db", "must be finite");
            }
            let mean_snr_convention = match s.mean_snr_convention.as_deref() {
                None | Some("per-antenna-pair") => MeanSnrConvention::PerAntennaPair,
                Some("per-transmit-antenna") => MeanSnrConvention::PerTransmitAntenna,
                Some(other) => {
                    c.push(
                        "sweep.mean_snr_convention",
                        format!("unknown convention '{other}', expected per-antenna-pair or per-transmit-antenna"),
                    );
                    MeanSnrConvention::PerAntennaPair
                }
            };
            axis.map(|axis| Sweep {
                axis,
                values,
                relay_link_mean_snr_db: s.relay_link_mean_snr_db,
                transmit_snr_db,
                mean_snr_convention,
            })
        }
    };

    let trials = match raw.trials {
        None => {
            c.push("trials", "required");
            1
        }
        Some(n) if n < 1 => {
            c.push("trials", format!("must be at least 1, got {n}"));
            1
        }
        Some(n) => n as u64,
    };

    let gamma0 = c.positive("gamma0", raw.gamma0, 1.0);

    let symbols_per_block = match raw.symbols_per_block {
        None => 1,
        Some(n) if n < 1 => {
            c.push("symbols_per_block", format!("must be at least 1, got {n}"));
            1
        }
        Some(n) => n as u64,
    };
    let early_stop_errors = match raw.early_stop_errors {
        Some(n) if n < 1 => {
            c.push("early_stop_errors", format!("must be at least 1, got {n}"));
            None
        }
        other => other.map(|n| n as u64),
    };

    let window_db = raw.window_db.map(|[lo, hi]| (lo, hi));
    if let Some((lo, hi)) = window_db {
        if !(lo < hi) {
            c.push(
                "window_db",
                format!("lower bound {lo} must be below upper bound {hi}"),
            );
        }
    }
    let fit_probability_window = raw
        .fit_probability_window
        .map_or((1e-5, 1e-2), |[lo, hi]| (lo, hi));
    {
        let (lo, hi) = fit_probability_window;
        if !(lo > 0.0 && lo < hi && hi <= 1.0) {
            c.push(
                "fit_probability_window",
                format!("need 0 < lo < hi <= 1, got [{lo}, {hi}]"),
            );
        }
    }

    if !c.diags.is_empty() {
        return Err(SpecError::Invalid(c.diags));
    }
    Ok(ExperimentSpec {
        mode,
        system,
        strategies,
        sweep: sweep.expect("sweep present when no diagnostics"),
        trials,
        seed: raw.seed.unwrap_or(1),
        output: raw.output.map(PathBuf::from),
        gamma0,
        ber: BerOptions {
            symbols_per_block,
            early_stop_errors,
        },
        window_db,
        fit_probability_window,
    })
}

/// One CSV line. `errors` counts bit errors or outages; `value` is the BER
/// or outage probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub snr_db: f64,
    pub strategy: Strategy,
    pub trials: u64,
    pub errors: u64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl From<&BerPoint> for CsvRow {
    fn from(p: &BerPoint) -> Self {
        Self {
            snr_db: p.snr_db,
            strategy: p.strategy,
            trials: p.trials,
            errors: p.bit_errors,
            value: p.ber,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
        }
    }
}

impl From<&OutagePoint> for CsvRow {
    fn from(p: &OutagePoint) -> Self {
        Self {
            snr_db: p.snr_db,
            strategy: p.strategy,
            trials: p.trials,
            errors: p.outage_count,
            value: p.p_out,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyFit {
    pub strategy: Strategy,
    pub fit: DiversityFit,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ExperimentOutput {
    pub rows: Vec<CsvRow>,
    pub fits: Vec<StrategyFit>,
    /// Fit failures (e.g. too few points inside the window), per strategy.
    pub fit_errors: Vec<(Strategy, String)>,
}

impl ExperimentOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.snr_db, r.strategy, r.trials, r.errors, r.value, r.ci_low, r.ci_high
            ));
        }
        out
    }
}

/// Runs a BER, outage or diversity sweep. Rows are ordered by sweep value,
/// then by the spec's strategy order.
pub fn run_experiment(spec: &ExperimentSpec, mode: Mode) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    let mut outage_by_strategy: Vec<Vec<OutagePoint>> = vec![Vec::new(); spec.strategies.len()];
    for &value in &spec.sweep.values {
        let cfg = spec.point_config(value);
        for (si, &strategy) in spec.strategies.iter().enumerate() {
            match mode {
                Mode::Ber => {
                    let p =
                        run_ber_point(&cfg, strategy, value, spec.trials, spec.seed, &spec.ber)?;
                    out.rows.push(CsvRow::from(&p));
                }
                Mode::Outage | Mode::Diversity => {
                    let p = run_outage_point(
                        &cfg,
                        strategy,
                        spec.gamma0,
                        value,
                        spec.trials,
                        spec.seed,
                    )?;
                    out.rows.push(CsvRow::from(&p));
                    outage_by_strategy[si].push(p);
                }
                Mode::SnrCheck | Mode::Protocol => {
                    return Err(crate::error::Error::InvalidParameter(format!(
                        "mode {} does not run a sweep",
                        mode.as_str()
                    )))
                }
            }
        }
    }
    if mode == Mode::Diversity {
        let s = &spec.system;
        let predicted = diversity_order(s.n_s, s.n_r, s.n_d);
        for (strategy, points) in spec.strategies.iter().zip(&outage_by_strategy) {
            let curve: Vec<CurvePoint> = points.iter().map(CurvePoint::from).collect();
            let result = match spec.window_db {
                Some(w) => fit_diversity(&curve, Some(w)),
                None => {
                    let (lo, hi) = spec.fit_probability_window;
                    fit_diversity(&within_probability_window(&curve, lo, hi), None)
                }
            };
            match result {
                Ok(mut fit) => {
                    fit.predicted_order = Some(predicted);
                    out.fits.push(StrategyFit {
                        strategy: *strategy,
                        fit,
                    });
                }
                Err(e) => out.fit_errors.push((*strategy, e.to_string())),
            }
        }
    }
    Ok(out)
}
