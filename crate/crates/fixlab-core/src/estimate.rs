//! Estimate records and their CSV form.

use std::fmt;

/// How a fixation probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Mc,
    Conditioned,
    SimLine,
    SimCircle,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Exact => "exact",
            Mode::Mc => "mc",
            Mode::Conditioned => "conditioned",
            Mode::SimLine => "sim-line",
            Mode::SimCircle => "sim-circle",
        };
        f.write_str(s)
    }
}

/// The unit of every answer: a point estimate with its uncertainty.
///
/// `std_error` is 0 and `replicates` is 0 for exact (enumerated) answers.
/// `n_sites` is 0 for scaling-limit oracles where no lattice size applies.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: u64,
    pub seed: Option<u64>,
    pub n_sites: usize,
    pub delta: f64,
}

impl FixationEstimate {
    pub fn exact(mean: f64, n_sites: usize, delta: f64) -> Self {
        FixationEstimate { mean, std_error: 0.0, replicates: 0, seed: None, n_sites, delta }
    }
}

/// CSV header for solver rows.
pub const CSV_HEADER: &str = "n,delta,mode,mean,std_error,replicates,seed";

/// CSV header for lattice-simulation rows (extra topology column).
pub const CSV_HEADER_SIM: &str = "n,delta,mode,topology,mean,std_error,replicates,seed";

/// 17 significant decimal digits; round-trips any f64.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

impl FixationEstimate {
    pub fn csv_row(&self, mode: Mode) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n_sites,
            format_sig17(self.delta),
            mode,
            format_sig17(self.mean),
            format_sig17(self.std_error),
            self.replicates,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        )
    }

    pub fn csv_row_sim(&self, mode: Mode, topology: &str) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n_sites,
            format_sig17(self.delta),
            mode,
            topology,
            format_sig17(self.mean),
            format_sig17(self.std_error),
            self.replicates,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        )
    }
}
