//! End-to-end experiment drivers on the builtin benches.

mod cnot;
mod drivers;
mod two_qubit;

pub use cnot::{
    best_correction, cnot_scene, cnot_truth_table, derive_corrections, frozen_correction,
    heralded_cnot_final_state, run_heralded_cnot, run_heralded_cnot_sampled,
    run_heralded_cnot_with, truth_table_csv, CnotRunReport, PatternReport, TruthTableRow,
    CORRECTION_TABLE,
};
pub use drivers::{
    concurrence_sweep, entangled_scene, heralded_scene, projective_scene, run_chsh,
    run_entangled_source, run_heralded, run_projective, run_single_qubit_gate, run_tomography,
    ChshAngles, ChshReport, EntangledReport, GateReport, HeraldedConfig, HeraldedReport,
    TomographyReport,
};
pub use two_qubit::{Pauli, TwoQubitState};

#[cfg(test)]
mod tests;
