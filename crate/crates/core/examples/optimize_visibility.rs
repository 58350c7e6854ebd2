//! Optimal per-window heating for a range of λ′, analytically and with a Monte-Carlo fit.

use qndsim::measure::asymptotic_visibility;
use qndsim::plan::{optimize_delta_nb, McFitOptions, OptimizationMethod};

fn main() -> qndsim::Result<()> {
    let n_eff = 1.0;
    println!("{:>8} {:>12} {:>10} {:>12}", "lambda'", "dn_b opt", "xi", "xi large-l'");
    for lp in [32.0, 100.0, 300.0, 1e3, 3e3] {
        let r = optimize_delta_nb(lp, n_eff, &OptimizationMethod::AnalyticPdf)?;
        println!("{lp:>8} {:>12.4} {:>10.4} {:>12.4}", r.delta_nb_opt, r.xi_max, asymptotic_visibility(lp, n_eff)?);
    }

    let mc = McFitOptions { n_windows: 40_000, seed: 3, ..McFitOptions::default() };
    let r = optimize_delta_nb(300.0, n_eff, &OptimizationMethod::MonteCarloPolyFit(mc))?;
    if let Some(fit) = &r.fit {
        println!(
            "MC fit at lambda' = 300: dn_b = {:.4} +/- {:.4}, xi = {:.4}, reduced chi^2 = {:.2}",
            r.delta_nb_opt, fit.delta_nb_uncertainty, r.xi_max, fit.reduced_chi_sq
        );
    }
    Ok(())
}
