//! Recomputes the frozen constants `C_n` by locating the centroid of the
//! Wick-rotated kernel, and writes the table shipped in `data/frak_c.txt`.
//!
//! ```bash
//! cargo run --release --example calibrate_frak_c -- crates/core/data/frak_c.txt
//! ```

use opstable::marginal_kernel::{calibrate_frak_c, frak_c, gfactor, FRAK_C_SCHEMA_VERSION};
use std::fmt::Write as _;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1);
    let mut table = String::new();
    writeln!(table, "# schema_version {FRAK_C_SCHEMA_VERSION}")?;
    writeln!(table, "# C_n = 2 a_n G_n / pi, G_n = int |lambda| K_W(1, lambda) d lambda")?;
    writeln!(table, "# n  frak_c")?;
    println!("{:>3} {:>22} {:>22} {:>12}", "n", "frak_c", "G_n", "shipped");
    for n in 1..=12u32 {
        let c = calibrate_frak_c(n)?;
        let shipped = frak_c(n).map(|s| format!("{:.3e}", (s - c).abs())).unwrap_or("-".into());
        println!("{n:>3} {c:>22.17} {:>22.17} {shipped:>12}", gfactor(n, c)?);
        writeln!(table, "{n} {c:.17}")?;
    }
    if let Some(path) = out {
        std::fs::write(&path, table)?;
        println!("wrote {path}");
    }
    Ok(())
}
