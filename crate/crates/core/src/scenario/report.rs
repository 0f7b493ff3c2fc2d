//! Report assembly: named values, tolerance-referenced verdicts, and
//! deterministic text/JSON rendering.

use crate::scenario::config::ScenarioConfig;
use crate::table::format_sig17;
use serde::Serialize;

/// Statement of which covariant-derivative and curvature conventions produced
/// the numbers in a report.
pub const CONNECTION_DISCLOSURE: &str = "connection choice: horizontal covariant derivative |k \
uses the Levi-Civita connection of gamma with the horizontal derivative d/dx^i - N^j_i d/dy^j, \
N^i_j = G^i_jk(x) y^k; vertical covariant derivative |_k uses plain d/dy with zero vertical \
coefficients; curvature convention r^i_jkl = d_l G^i_jk - d_k G^i_jl + G^p_jk G^i_pl - G^p_jl \
G^i_pk with ricci r_ij = r^k_ijk (unit 2-sphere has ricci = gamma); t_ij is computed verbatim \
without symmetrization and its antisymmetric part is reported.";

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub observed: f64,
    /// `"<="` or `">="`.
    pub comparison: String,
    pub threshold: f64,
    /// Name of the tolerance that produced the threshold.
    pub tolerance_name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeInfo {
    pub volume: f64,
    pub half_volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub connection_disclosure: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume: Option<VolumeInfo>,
    pub values: Vec<ReportValue>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub csv_files: Vec<String>,
    pub config: ScenarioConfig,
}

impl Report {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Report {
            scenario: cfg.kind.name().to_string(),
            connection_disclosure: CONNECTION_DISCLOSURE.to_string(),
            volume: None,
            values: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            csv_files: Vec::new(),
            config: cfg.clone(),
        }
    }

    pub fn set_volume(&mut self, volume: f64) {
        self.volume = Some(VolumeInfo {
            volume,
            half_volume: 0.5 * volume,
        });
    }

    pub fn add_value(&mut self, name: &str, value: f64) {
        self.values.push(ReportValue {
            name: name.to_string(),
            value,
        });
    }

    pub fn add_note(&mut self, note: &str) {
        self.notes.push(note.to_string());
    }

    /// Verdict `observed <= threshold`.
    pub fn check_le(&mut self, name: &str, observed: f64, threshold: f64, tolerance_name: &str) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            observed,
            comparison: "<=".into(),
            threshold,
            tolerance_name: tolerance_name.to_string(),
            pass: observed <= threshold,
        });
    }

    /// Verdict `observed >= threshold`.
    pub fn check_ge(&mut self, name: &str, observed: f64, threshold: f64, tolerance_name: &str) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            observed,
            comparison: ">=".into(),
            threshold,
            tolerance_name: tolerance_name.to_string(),
            pass: observed >= threshold,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Deterministic human-readable rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario: {}\n", self.scenario));
        out.push_str(&format!(
            "status: {}\n",
            if self.all_pass() { "PASS" } else { "FAIL" }
        ));
        if let Some(v) = &self.volume {
            out.push_str("\n[volume]\n");
            out.push_str(&format!("volume = {}\n", format_sig17(v.volume)));
            out.push_str(&format!("half_volume = {}\n", format_sig17(v.half_volume)));
        }
        if !self.values.is_empty() {
            out.push_str("\n[values]\n");
            for v in &self.values {
                out.push_str(&format!("{} = {}\n", v.name, format_sig17(v.value)));
            }
        }
        if !self.verdicts.is_empty() {
            out.push_str("\n[verdicts]\n");
            for v in &self.verdicts {
                out.push_str(&format!(
                    "{} {}: {} {} {} (tolerance {})\n",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.name,
                    format_sig17(v.observed),
                    v.comparison,
                    format_sig17(v.threshold),
                    v.tolerance_name,
                ));
            }
        }
        if !self.notes.is_empty() {
            out.push_str("\n[notes]\n");
            for n in &self.notes {
                out.push_str(&format!("- {n}\n"));
            }
        }
        if !self.csv_files.is_empty() {
            out.push_str("\n[tables]\n");
            for f in &self.csv_files {
                out.push_str(&format!("- {f}\n"));
            }
        }
        out.push_str("\n[connection]\n");
        out.push_str(&self.connection_disclosure);
        out.push('\n');
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}
