//! Energy functional, energy-law audits and blow-up monitoring.

mod energy;
mod monitor;
mod record;

pub use energy::{
    audit_with_bundle, case2_lower_bound_check, energies, energy_law_audit, energy_report, fill_channels,
    total_energy, Energies, EnergyReport, RegularizationTerm,
};
pub use monitor::{blowup_update, quantity_a, quantity_ys, BlowupMonitorState, MonitorSample};
pub use record::{csv_header, DiagnosticRow, Recorder, CSV_COLUMNS};
