//! `t^E` for both Jordan classes and a block-diagonal exponent.

use opstable::operator_algebra::{determinant_power, matrix_power, transpose_power_apply, BlockIndex, StableIndex};

fn main() -> opstable::error::Result<()> {
    let pure = StableIndex::pure_scaling(2, 0.8)?;
    let rot = StableIndex::scaling_rotation(0.9, 0.4)?;
    for t in [0.5, 2.0, 10.0] {
        println!("t = {t}");
        println!("  pure   t^E = {:.6}", matrix_power(t, &pure)?);
        println!("  rot    t^E = {:.6}", matrix_power(t, &rot)?);
        println!("  det t^E = {:.6} (t^tr E = {:.6})", determinant_power(t, &rot)?, t.powf(rot.trace()));
        println!("  t^E^T [1, 0] = {:?}", transpose_power_apply(t, &rot, &[1.0, 0.0])?);
    }
    let block = BlockIndex::new(vec![pure, rot])?;
    println!("block dim {} trace {:.4}", block.dim(), block.trace());
    println!("block t^E at t = 3 {:.5}", block.matrix_power(3.0)?);
    Ok(())
}
