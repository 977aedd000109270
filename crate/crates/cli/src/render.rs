use algprob::measure::{fmt_sig, DiscreteLaw};
use algprob::qpu::ShotResult;
use serde_json::Value;

const BAR_WIDTH: usize = 40;

/// One command result in every output format.
pub struct Report {
    pub json: Value,
    pub csv: Option<String>,
    pub text: String,
}

impl Report {
    pub fn new(json: Value, text: String) -> Self {
        Report { json, csv: None, text }
    }

    pub fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

/// `outcome,value` rows with a header.
pub fn csv_rows(header: &str, rows: &[(String, f64)]) -> String {
    let mut s = format!("outcome,{header}\n");
    for (label, v) in rows {
        s.push_str(&format!("{label},{}\n", fmt_sig(*v)));
    }
    s
}

/// ASCII bars scaled so the largest value fills the full width.
pub fn bars(rows: &[(String, f64)]) -> String {
    let max = rows.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (label, v) in rows {
        let len = if max > 0.0 { ((v / max) * BAR_WIDTH as f64).round() as usize } else { 0 };
        s.push_str(&format!("{label:>label_w$} | {:<BAR_WIDTH$} {}\n", "#".repeat(len), fmt_sig(*v)));
    }
    s
}

pub fn law_rows(law: &DiscreteLaw) -> Vec<(String, f64)> {
    law.outcomes.iter().zip(&law.probs).map(|(o, p)| (o.to_string(), *p)).collect()
}

/// Counts for every outcome position of `law`, zeros included.
pub fn shot_rows(law: &DiscreteLaw, shots: &ShotResult) -> Vec<(String, f64)> {
    law.outcomes.iter().enumerate().map(|(k, o)| (o.to_string(), shots.count(k) as f64)).collect()
}

/// Matrix as aligned rows of `re+imi` entries.
pub fn matrix_text(m: &algprob::CMatrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| complex_text(m[(i, j)])).collect();
        s.push_str("  ");
        s.push_str(&row.join("  "));
        s.push('\n');
    }
    s
}

pub fn complex_text(z: algprob::C64) -> String {
    if z.im == 0.0 {
        fmt_sig(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", fmt_sig(z.re), fmt_sig(-z.im))
    } else {
        format!("{}+{}i", fmt_sig(z.re), fmt_sig(z.im))
    }
}
