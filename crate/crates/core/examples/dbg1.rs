use asmc_core::diagnostics::*;
use asmc_core::potential::*;
use asmc_core::schedule::*;
use asmc_core::smc::*;
use asmc_core::oracle::*;
use std::time::Instant;

fn main() {
    let pot = Potential::quartic();
    let ls = landscape_summary(&pot, 1.0).unwrap();
    let h = TestFunction::basin_indicator(&pot, &ls, 0, 0.5);
    for (n, t) in [(4000usize, 5.0f64), (6000, 5.0)] {
        let schedule = build_schedule(0.05, 20, 1.0).unwrap();
        let opts = AsmcOptions::default();
        let start = Instant::now();
        let mut errors = Vec::new();
        for seed in 0..30u64 {
            let (samples, _) = run_asmc(&pot, &schedule, n, t, &opts, &InitialEnsemble::UniformCube, Some(&ls), seed).unwrap();
            errors.push(mc_error(&samples, &h));
        }
        let elapsed = start.elapsed().as_secs_f64();
        let within = errors.iter().filter(|&&e| e < 0.05).count();
        let max = errors.iter().cloned().fold(0.0f64, f64::max);
        let mean_sq = (errors.iter().map(|e| e*e).sum::<f64>()/errors.len() as f64).sqrt();
        println!("N={n} T={t}: {within}/30 within 0.05, rms {mean_sq:.4}, max {max:.4}, {:.1}s/30 runs", elapsed);
    }
}
