//! CSV artifacts: a `#`-prefixed provenance header, one column line, the
//! data rows, and optional `#` footer lines.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::LabError;

pub const TOOL: &str = concat!("mala-lab ", env!("CARGO_PKG_VERSION"));

pub const THEORY_COLUMNS: &[&str] = &["lemma", "target", "ell_or_delta", "estimate", "ci_lo", "ci_hi", "bound", "pass", "detail"];
pub const MIXING_COLUMNS: &[&str] = &[
    "dim",
    "eta",
    "tau_hat",
    "predicted_n",
    "predicted_n_naive",
    "h",
    "noise_floor",
    "initial_tv",
    "acceptance_rate",
];
pub const CONDUCTANCE_COLUMNS: &[&str] = &["s", "phi_s", "bound_check"];
pub const LOVASZ_COLUMNS: &[&str] = &["n", "tv", "bound", "slack", "pass"];
pub const SAMPLE_COLUMNS: &[&str] = &["chain", "iterations", "accepted", "rejected", "held", "acceptance_rate", "file"];

/// Which column layout a CSV uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Theory,
    Mixing,
    Conductance,
    Lovasz,
    Sample,
}

impl Schema {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Schema::Theory => THEORY_COLUMNS,
            Schema::Mixing => MIXING_COLUMNS,
            Schema::Conductance => CONDUCTANCE_COLUMNS,
            Schema::Lovasz => LOVASZ_COLUMNS,
            Schema::Sample => SAMPLE_COLUMNS,
        }
    }

    pub fn from_columns(line: &str) -> Option<Self> {
        [Schema::Theory, Schema::Mixing, Schema::Conductance, Schema::Lovasz, Schema::Sample]
            .into_iter()
            .find(|s| s.columns().join(",") == line)
    }
}

#[derive(Debug, Clone)]
pub struct CsvDoc {
    pub schema: Schema,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<(String, String)>,
    pub passed: usize,
    pub failed: usize,
}

impl CsvDoc {
    pub fn new(schema: Schema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
            footer: Vec::new(),
            passed: 0,
            failed: 0,
        }
    }

    /// Appends a row; commas inside cells become `;`.
    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.schema.columns().len());
        self.rows.push(row.into_iter().map(|c| c.replace(',', ";")).collect());
    }

    /// Records one assertion outcome.
    pub fn tally(&mut self, ok: bool) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }

    pub fn foot_f(&mut self, key: &str, value: f64) {
        self.foot(key, fmt_f(value));
    }

    pub fn foot(&mut self, key: &str, value: impl ToString) {
        self.footer.push((key.to_string(), value.to_string()));
    }

    /// Column line, rows and footer: the part that must be reproducible.
    pub fn body(&self) -> String {
        let mut s = self.schema.columns().join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        for (k, v) in &self.footer {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }

    pub fn render(&self, meta: &RunMeta<'_>) -> String {
        let mut s = meta.header();
        s.push_str(&self.body());
        s
    }

    pub fn write(&self, path: &Path, meta: &RunMeta<'_>) -> Result<(), LabError> {
        std::fs::write(path, self.render(meta))?;
        Ok(())
    }
}

pub struct RunMeta<'a> {
    pub experiment: &'a str,
    pub seed: u64,
    pub resolved_config: &'a str,
    pub wall_clock_s: f64,
    pub passed: usize,
    pub failed: usize,
}

impl RunMeta<'_> {
    /// Provenance header for any text artifact of the run.
    pub fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tool: {TOOL}");
        let _ = writeln!(s, "# experiment: {}", self.experiment);
        let _ = writeln!(s, "# seed: {}", self.seed);
        for line in self.resolved_config.lines() {
            let _ = writeln!(s, "# config: {line}");
        }
        s.push_str(&self.header_tail());
        s
    }

    fn header_tail(&self) -> String {
        format!(
            "# wall_clock_s: {:.3}\n# passed: {}\n# failed: {}\n",
            self.wall_clock_s, self.passed, self.failed
        )
    }
}

/// Shortest round-trip representation; scientific outside `[1e-4, 1e15)`.
pub fn fmt_f(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

pub fn fmt_pass(ok: bool) -> String {
    if ok { "PASS" } else { "FAIL" }.to_string()
}

/// Everything from the column line on; identical across reruns with the
/// same configuration and seed.
pub fn body_of(text: &str) -> &str {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        offset += line.len();
    }
    &text[offset..]
}
