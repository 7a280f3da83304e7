//! Joint characteristic function on a lattice and its 2-D inversion.

use opstable::jump_intensity::JumpIntensitySpec;
use opstable::path_law::{joint_char, joint_density, max_char, FrequencyGrid, PathLattice, StepLaw};

fn main() -> opstable::error::Result<()> {
    let step = StepLaw { spec: JumpIntensitySpec::gaussian(), sigma: vec![1.0], beta: 0.7 };
    let lat = PathLattice::new(0.0, vec![1.0], 64, step.clone())?;
    for (k, w) in [(0.5, 0.0), (0.5, 0.5), (1.0, -0.7)] {
        let a = max_char(&lat, k, w)?;
        let b = joint_char(&lat, &[k], w)?;
        println!("k={k} w={w}: geometric {:.15} termwise {:.15}", a.re, b.re);
    }

    let two = PathLattice::new(0.0, vec![0.5, 1.0], 32, step.clone())?;
    println!("two times: chi([0.4, 0.2], 0.3) = {:.10}", joint_char(&two, &[0.4, 0.2], 0.3)?);

    let lat = PathLattice::new(0.0, vec![1.0], 16, step)?;
    let grid = FrequencyGrid::from_spacing(512, 0.04);
    let dens = joint_density(&lat, grid, 0.08)?;
    println!(
        "density on {}x{}: raw mass {:.6}, min before clip {:.2e}, mass on x > y {:.4}",
        grid.m, grid.m, dens.raw_mass, dens.min_before_clip, dens.off_support_mass
    );
    Ok(())
}
