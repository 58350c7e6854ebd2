//! Monte-Carlo homodyne outcomes compared with the single-jump density.

use qndsim::measure::{
    ks_two_peak, mc_sample_outcomes, visibility_from_histogram, visibility_from_pdf, MeasurementConfig,
    OutcomeHistogram, ValleyRule,
};

fn main() -> qndsim::Result<()> {
    let cfg = MeasurementConfig::new(100.0, 1.0, 0.27)?.with_sampling(50_000, 1);
    let samples = mc_sample_outcomes(&cfg)?;
    for w in &samples.warnings {
        eprintln!("warning: {w}");
    }
    let hist = OutcomeHistogram::for_config(&samples.values, &cfg)?;
    let sampled = visibility_from_histogram(&hist, cfg.snr, ValleyRule::Midpoint)?;
    let analytic = visibility_from_pdf(&cfg, ValleyRule::Midpoint)?;

    println!("D/sigma            = {:.3}", cfg.snr);
    println!("mean jumps/window  = {:.4}", samples.total_jumps as f64 / cfg.n_windows as f64);
    println!("KS distance        = {:.4}", ks_two_peak(&samples.values, &cfg));
    println!("visibility sampled = {:.4} +/- {:.4}", sampled.xi, sampled.xi_uncertainty);
    println!("visibility density = {:.4}", analytic.xi);

    // Coarse text histogram of the two-peak region.
    let peak = (0..hist.bins()).map(|k| hist.density(k)).fold(0.0, f64::max);
    for k in (0..hist.bins()).step_by(4).take_while(|&k| hist.center(k) < cfg.snr + 3.0) {
        let bar = "#".repeat((60.0 * hist.density(k) / peak) as usize);
        println!("{:>6.2} {bar}", hist.center(k));
    }
    Ok(())
}
