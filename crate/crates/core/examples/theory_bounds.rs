//! Evaluate the survival bounds in closed form, check one of them by Monte
//! Carlo, then print the full verification table.

use refine::theory::{marked_model, simulate_survival, thm1_bound, thm2_bound, verify_all};

fn main() -> refine::Result<()> {
    println!("single-round survival lower bound, alpha = 0.4, p_max = 0.9");
    for j in [1, 3, 10, 30] {
        println!("  J = {j:>2}: {:.4}", thm1_bound(0.4, j, 0.9)?);
    }
    println!("survival upper bound for an uninformative instance, eps = 0.01, M = 8, J = 10");
    for r in [1, 3, 5] {
        println!("  R = {r}: {:.4}", thm2_bound(0.4, 0.01, 8, 10, r)?);
    }

    let model = marked_model(&[0.9, 0.2], 250, 0.4, 10, 3);
    let report = simulate_survival(&model, &[0], 5_000, 1)?;
    let first = report.instances[0].per_round[0];
    println!(
        "simulated first-round survival {:.4} +/- {:.4} vs bound {:.4}",
        first.freq,
        first.se,
        thm1_bound(0.4, 10, 0.9)?
    );

    println!();
    for c in verify_all(5_000, 0)? {
        println!("{:<72} {:>8.4} {:>8.4} {}", c.name, c.bound, c.empirical, if c.pass { "ok" } else { "FAIL" });
    }
    Ok(())
}
