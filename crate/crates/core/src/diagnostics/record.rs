use std::io::Write;

use serde::Serialize;

use super::energy::{audit_with_bundle, energy_report, EnergyReport, RegularizationTerm};
use super::monitor::BlowupMonitorState;
use crate::error::Result;
use crate::physics::{ConstitutiveBundle, FieldState};
use crate::solver::Observer;

/// Column names and units of the time-series CSV, in output order.
pub const CSV_COLUMNS: [(&str, &str); 22] = [
    ("time", "T"),
    ("E_total", "E"),
    ("E_kinetic", "E"),
    ("E_elastic", "E"),
    ("E_penalty", "E"),
    ("D_mu1", "E/T"),
    ("D_visc", "E/T"),
    ("D_Ad", "E/T"),
    ("D_N", "E/T"),
    ("D_cross", "E/T"),
    ("D_case1_director", "E/T"),
    ("D_case1_Ad", "E/T"),
    ("D_reg", "E/T"),
    ("residual_general", "E/T"),
    ("residual_case1", "E/T"),
    ("sup_curl_u", "1/T"),
    ("sup_grad_d", "1/L"),
    ("B_integral", "1"),
    ("G_bracket_C1", "1"),
    ("Y3", "E"),
    ("A_qty", "E/L^2"),
    ("logsob_ratio_C1", "1"),
];

pub fn csv_header() -> String {
    CSV_COLUMNS.iter().map(|(n, u)| format!("{n}[{u}]")).collect::<Vec<_>>().join(",")
}

/// One line of the time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub report: EnergyReport,
    pub sup_curl_u: f64,
    pub sup_grad_d: f64,
    pub b_integral: f64,
    pub g_bracket: f64,
    pub y3: f64,
    pub a_qty: f64,
    pub logsob_ratio: f64,
}

impl DiagnosticRow {
    fn new(report: EnergyReport, m: &BlowupMonitorState) -> Self {
        let last = m.latest().copied();
        DiagnosticRow {
            report,
            sup_curl_u: last.map_or(f64::NAN, |s| s.sup_curl_u),
            sup_grad_d: last.map_or(f64::NAN, |s| s.sup_grad_d),
            b_integral: m.b_integral,
            g_bracket: m.g_bracket,
            y3: m.y3,
            a_qty: m.a_qty,
            logsob_ratio: m.logsob_ratio,
        }
    }

    pub fn values(&self) -> [f64; 22] {
        let r = &self.report;
        [
            r.time,
            r.E_total,
            r.E_kinetic,
            r.E_elastic,
            r.E_penalty,
            r.D_mu1,
            r.D_visc,
            r.D_Ad,
            r.D_N,
            r.D_cross,
            r.D_case1_director,
            r.D_case1_Ad,
            r.D_reg,
            r.residual_general,
            r.residual_case1,
            self.sup_curl_u,
            self.sup_grad_d,
            self.b_integral,
            self.g_bracket,
            self.y3,
            self.a_qty,
            self.logsob_ratio,
        ]
    }

    /// Values with 17 significant digits.
    pub fn to_csv(&self) -> String {
        self.values().iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")
    }
}

/// Observer that audits every due step, updates the blow-up monitor and
/// optionally streams CSV rows.
pub struct Recorder {
    reg: Option<RegularizationTerm>,
    monitor: BlowupMonitorState,
    rows: Vec<DiagnosticRow>,
    sink: Option<Box<dyn Write + Send>>,
    slack: f64,
    /// Audited steps with `E(next) > E(prev) + slack`.
    pub energy_increases: Vec<f64>,
    /// Audited steps where a Case 1 channel was negative (checked only when
    /// the coefficients are in Case 1).
    pub negative_channel_steps: Vec<f64>,
    check_case1: bool,
}

impl Recorder {
    pub fn new(monitor: BlowupMonitorState, reg: Option<RegularizationTerm>) -> Self {
        Recorder {
            reg,
            monitor,
            rows: Vec::new(),
            sink: None,
            slack: 1e-8,
            energy_increases: Vec::new(),
            negative_channel_steps: Vec::new(),
            check_case1: false,
        }
    }

    pub fn with_sink(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.sink = Some(sink);
        self
    }

    /// Absolute slack allowed on the energy increase of one step.
    pub fn with_monotonicity_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    /// Also flag negative Case 1 channels.
    pub fn checking_case1(mut self, on: bool) -> Self {
        self.check_case1 = on;
        self
    }

    pub fn rows(&self) -> &[DiagnosticRow] {
        &self.rows
    }

    pub fn monitor(&self) -> &BlowupMonitorState {
        &self.monitor
    }

    pub fn finish(&mut self) -> Result<()> {
        if let Some(s) = self.sink.as_mut() {
            s.flush()?;
        }
        Ok(())
    }

    fn push(&mut self, row: DiagnosticRow) -> Result<()> {
        if let Some(s) = self.sink.as_mut() {
            if self.rows.is_empty() {
                writeln!(s, "{}", csv_header())?;
            }
            writeln!(s, "{}", row.to_csv())?;
        }
        self.rows.push(row);
        Ok(())
    }
}

impl Observer for Recorder {
    fn start(&mut self, initial: &FieldState) -> Result<()> {
        let b = ConstitutiveBundle::new(initial)?;
        let report = energy_report(initial, &b, self.reg)?;
        self.monitor.update(initial)?;
        let row = DiagnosticRow::new(report, &self.monitor);
        self.push(row)
    }

    fn observe(&mut self, _step: usize, prev: &FieldState, next: &FieldState, bundle: &ConstitutiveBundle, dt: f64) -> Result<()> {
        let report = audit_with_bundle(prev, bundle, next, dt, self.reg)?;
        if report.energy_change > self.slack {
            self.energy_increases.push(next.time);
        }
        if self.check_case1 && !report.negative_case1_channels(0.0).is_empty() {
            self.negative_channel_steps.push(next.time);
        }
        self.monitor.update(next)?;
        let row = DiagnosticRow::new(report, &self.monitor);
        self.push(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_columns() {
        let h = csv_header();
        assert!(h.starts_with("time[T],E_total[E],"));
        assert!(h.ends_with("logsob_ratio_C1[1]"));
        assert_eq!(h.split(',').count(), 22);
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = format!("{:.16e}", 1.0f64 / 3.0);
        assert_eq!(s, "3.3333333333333331e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
