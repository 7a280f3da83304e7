//! The kernel on the real axis, its Wick-rotated form and the n-marginal
//! characteristic function built on it.

use opstable::jump_intensity::JumpIntensitySpec;
use opstable::marginal_kernel::{frak_g, kernel, kernel_wick, n_marginal_char, wick_reach, MarginalQuery};
use opstable::quadrature::{integrate_real, Tolerance};

fn main() -> opstable::error::Result<()> {
    for n in [2u32, 4] {
        for kk in [0.1, 1.0, 10.0] {
            let r = wick_reach(n, kk);
            let mass = integrate_real(|l| kernel_wick(n, kk, l).unwrap(), -r, r, Tolerance::new(1e-12, 1e-10))?;
            println!("n={n} kk={kk:<5} mass {mass:.12}  K(kk, 1) = {:.6}", kernel(n, kk, 1.0)?);
        }
    }
    let spec = JumpIntensitySpec::pure_scaling(1, 1.5, -1.0)?;
    println!("{:>3} {:>8} {:>26}", "n", "G_n", "nu(k = 0.5 | 0.25)");
    for n in 1..=6u32 {
        let q = MarginalQuery { spec, n, k: 0.5, delta_t: 0.25, sigma: vec![1.0], beta: 0.7 };
        println!("{n:>3} {:>8.5} {:>26.10}", frak_g(n)?, n_marginal_char(&q)?);
    }
    Ok(())
}
