//! Planned drive and λ′ as the stray capacitance grows.

use qndsim::params::{CircuitSpec, MembraneSpec};
use qndsim::plan::{sweep, PlanTargets, SweepAxis, SweepTemplate, TargetRule};
use std::f64::consts::TAU;

fn main() -> qndsim::Result<()> {
    let c0 = 13e-15;
    let mut circuit = CircuitSpec::double_arm_from_rates(TAU * 7e9, TAU * 150e3, TAU * 150e3, 1e-2, 0.1, c0)?;
    circuit.n_bar_e = Some(0.0);
    let mut membrane = MembraneSpec::new(1e-6, 0.3e-6, 10e-9, TAU * 80e6);
    membrane.x0_override = Some(1.26e-12);
    membrane.quality_q = Some(1e6);
    membrane.n_bar_m = Some(0.0);

    let template = SweepTemplate {
        circuit,
        membrane,
        delta_g1_rel: 0.01,
        targets: TargetRule::Fixed(PlanTargets { delta_nb_electrical: Some(0.21), n_e: Some(1.0), window: None }),
        n_eff: 1.0,
        mc: None,
    };
    let grid = [1.0, 3.0, 10.0, 30.0, 100.0, 300.0];
    let table = sweep(&template, SweepAxis::CsOverC0, &grid)?;

    let show = ["axis_value", "g1", "lambda", "window", "p_in"];
    let labels = ["Cs/C0", "g1 [Hz]", "lambda", "window [s]", "P_in [W]"];
    let idx: Vec<usize> = show.iter().map(|c| table.columns.iter().position(|x| x == c).unwrap()).collect();
    println!("{}", labels.map(|c| format!("{c:>14}")).join(""));
    for row in &table.rows {
        if let Some(err) = &row.error {
            println!("{:>14} failed: {err}", row.values[idx[0]].unwrap_or(f64::NAN));
            continue;
        }
        let cells: Vec<String> = idx
            .iter()
            .map(|&k| {
                let v = row.values[k].unwrap_or(f64::NAN);
                // Couplings come back in rad/s.
                let v = if table.columns[k] == "g1" { v / TAU } else { v };
                format!("{v:>14.4e}")
            })
            .collect();
        println!("{}", cells.join(""));
    }
    Ok(())
}
