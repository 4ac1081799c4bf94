//! Run the identity suite and print each check.

use boltzmann_green::identities::identity_suite;

fn main() -> boltzmann_green::Result<()> {
    for c in identity_suite()? {
        println!("{:<34} {:>10.2e} <= {:.0e}  {}", c.name, c.error, c.tolerance, if c.passed() { "ok" } else { "FAILED" });
    }
    Ok(())
}
