use opstable::jump_intensity::{char_fn, functional_equation_residual, JumpIntensitySpec};

fn main() -> opstable::error::Result<()> {
    let gauss = JumpIntensitySpec::gaussian();
    let heavy = JumpIntensitySpec::pure_scaling(2, 0.75, -1.0)?;
    println!("{:>6} {:>14} {:>14}", "k", "gaussian", "d=2 mu=0.75");
    for k in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
        println!("{k:>6} {:>14.8} {:>14.8}", char_fn(&gauss, &[k])?, char_fn(&heavy, &[k, 0.0])?);
    }

    let mut worst: f64 = 0.0;
    for t in [0.1, 0.7, 3.0, 25.0] {
        for k in [[0.3, -1.2], [2.0, 0.5]] {
            worst = worst.max(functional_equation_residual(&heavy, t, &k)?);
        }
    }
    println!("pure scaling: max |phi(k)^t - phi(t^E^T k)| = {worst:.2e}");

    // rotation class: solvable only on t = |k|^{2 mu m}; phi is not bounded by one here
    let rot = JumpIntensitySpec::rotation(0.8, 0.5, 1, -0.6, 20)?;
    for k in [[0.6f64, 0.2], [0.3, -0.5]] {
        let r = (k[0] * k[0] + k[1] * k[1]).sqrt();
        let t = r.powf(2.0 * 0.8);
        println!("rotation k = {k:?}: residual {:.2e}, phi = {:.6}", functional_equation_residual(&rot, t, &k)?, char_fn(&rot, &k)?);
    }
    Ok(())
}
