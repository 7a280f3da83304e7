use opstable::jump_intensity::JumpIntensitySpec;
use opstable::option_engine::{drift_derivative, solve_frak_m, DeviationQuery, TailLaw};

fn main() -> opstable::error::Result<()> {
    let mu = 1.5;
    for alpha in [0.5 * mu, 1.5 * mu] {
        let q = DeviationQuery {
            k: 0.0,
            delta_t: 0.01,
            beta: 0.7,
            spec: JumpIntensitySpec::pure_scaling(1, mu, -1.0)?,
            sigma: vec![1.0],
            drift: 0.0,
            tail: TailLaw::LogTail { frak_t: 1e-2, tail_alpha: alpha },
            epsilon: 1e-2,
            frak_m: solve_frak_m(1)?,
        };
        println!("tail_alpha = {alpha}");
        for step in [1e-3, 1e-4, 1e-5, 1e-6] {
            println!("  step {step:.0e}: |(chi(step) - 1)/step| = {:.4e}", drift_derivative(&q, step)?.norm());
        }
    }
    Ok(())
}
