//! Tail series of a symmetric stable density against Fourier inversion.
//!
//! Close to the body the series loses accuracy; the printed relative error
//! shows where it becomes usable.

use opstable::jump_intensity::{density_via_inversion, stable_density_series, JumpIntensitySpec};

fn main() -> opstable::error::Result<()> {
    let mu = 1.5;
    let spec = JumpIntensitySpec::pure_scaling(1, mu, -1.0)?;
    let xs: Vec<f64> = (0..=16).map(|i| 2.0 + 0.5 * i as f64).collect();
    let mut grid: Vec<f64> = xs.iter().rev().map(|x| -x).collect();
    grid.extend(&xs);
    let numeric = density_via_inversion(&spec, &grid)?.split_off(xs.len());
    println!("{:>6} {:>14} {:>14} {:>10} {:>6}", "x", "inversion", "series", "rel err", "terms");
    for (x, p) in xs.iter().zip(&numeric) {
        let s = stable_density_series(*x, mu, 10)?;
        println!("{x:>6} {p:>14.6e} {:>14.6e} {:>10.2e} {:>6}", s.value, (s.value / p - 1.0).abs(), s.terms_used);
    }
    let c = stable_density_series(10.0, 1.0, 10)?.value;
    println!("cauchy at 10: series {c:.12e}, exact {:.12e}", 1.0 / (std::f64::consts::PI * 101.0));
    Ok(())
}
