//! Simulates paths with heavy-tailed waits and compares the empirical
//! characteristic function of the fluctuation sum with its closed form.
//!
//! ```bash
//! cargo run --release --example simulate_ctrw -- paths.csv
//! ```

use opstable::ctrw::{
    empirical_char, empirical_char_samples, path_rng, sample_fluctuation, sample_waiting_time,
    simulate_paths, tail_slope, write_paths_csv, ModelParams, WaitingTimeLaw,
};
use opstable::jump_intensity::{char_fn, JumpIntensitySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams {
        alpha: 0.0,
        beta: 0.7,
        sigma: vec![1.0],
        c: 3.0,
        waiting: WaitingTimeLaw::with_laplace_scale(0.7, 1.0)?,
        jumps: JumpIntensitySpec::gaussian(),
    };

    let mut rng = path_rng(1, 0);
    let xs: Vec<f64> = (0..100_000)
        .map(|_| sample_fluctuation(&params, 1.0, &mut rng).map(|v| v[0]))
        .collect::<Result<_, _>>()?;
    for k in [0.25, 0.5, 1.0, 2.0] {
        let e = empirical_char_samples(&xs, k);
        let want = (params.c * (char_fn(&params.jumps, &[k])? - 1.0)).exp();
        println!("k={k:<5} empirical {:.5} +- {:.5}  closed {want:.5}", e.value.re, e.std_error);
    }

    let waits: Vec<f64> = (0..1_000_000).map(|_| sample_waiting_time(&params.waiting, &mut rng)).collect();
    let levels: Vec<f64> = (0..=8).map(|i| 10f64.powf(-2.5 - 0.25 * i as f64)).collect();
    println!("waiting-time tail slope {:.3} (beta = {})", tail_slope(&waits, &levels), params.beta);

    let paths = simulate_paths(&params, 5.0, 42, 2000)?;
    let mean_events = paths.iter().map(|p| p.event_times.len()).sum::<usize>() as f64 / paths.len() as f64;
    let e = empirical_char(&paths, 5.0, 0.3)?;
    println!("2000 paths to T=5: {mean_events:.2} events on average, E exp(0.3 i X_T) = {:.4}", e.value);

    if let Some(path) = std::env::args().nth(1) {
        write_paths_csv(&paths[..20], std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
