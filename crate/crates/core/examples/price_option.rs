//! Prices a call with and without the tail correction.
//!
//! ```bash
//! cargo run --release --example price_option -- surface.csv
//! ```

use opstable::option_engine::{solve_frak_m, solve_option, Correction, GridConfig, OptionSpec, TailLaw};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = OptionSpec { strike: 100.0, maturity: 1.0, rate: 0.05 };
    let cfg = GridConfig::default();
    let plain = solve_option(&spec, &Correction::Disabled, &cfg)?;
    let r = &plain.report;
    println!(
        "no correction: atm {:.6}, closed form {:.6}, violations {}, max residual {:.2e}",
        r.atm_price,
        r.black_scholes.unwrap_or(f64::NAN),
        r.bound_violations,
        r.max_residual
    );

    let frak_m = solve_frak_m(1)?;
    let with_tail = |tail| Correction::Enabled {
        tail,
        mu: 1.5,
        epsilon: 1e-2,
        frak_m,
        probes: [1e-4, 1e-5],
        probe_tol: 1e-3,
    };
    let corrected = with_tail(TailLaw::LogTail { frak_t: 1e-2, tail_alpha: 0.75 });
    let sol = solve_option(&spec, &corrected, &cfg)?;
    let kappa = sol.report.probe.as_ref().map(|p| p.constant).unwrap_or(f64::NAN);
    println!("log tail: atm {:.6}, small-k constant {kappa:.6}", sol.report.atm_price);
    for s in [60.0, 80.0, 100.0, 120.0, 150.0] {
        println!("  S={s:<5} plain {:>10.5} corrected {:>10.5}", plain.grid.price_at(s, 0)?, sol.grid.price_at(s, 0)?);
    }

    match solve_option(&spec, &with_tail(TailLaw::Power { coeff: 1.0, degree: 2 }), &cfg) {
        Ok(_) => println!("quadratic tail: solved"),
        Err(e) => println!("quadratic tail: {e}"),
    }

    if let Some(path) = std::env::args().nth(1) {
        plain.grid.write_csv(&plain.residual, std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
