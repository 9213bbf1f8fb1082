//! Batching for dependent sequences: regenerative-cycle batching on a finite
//! Markov chain (ratio estimand E Y / E tau) and gap batching on an AR(1)
//! process, plus cycle extraction on an M/M/1 waiting-time path.
//!
//! Run with: cargo run --release --example dependent_data

use batchcov::dependent::*;
use batchcov::*;

fn main() -> Result<()> {
    // --- regenerative cycles on a two-state chain ---
    let spec = two_state_chain(0.5)?;
    println!(
        "two-state chain: stationary mean {}, expected cycle length {:?}",
        spec.stationary_target,
        spec.expected_cycle_length()
    );
    let traj = simulate_trajectory(&spec, 30, 1)?;
    let pairs = regenerative_pairs(&traj, |v| *v == 0.0, |v| *v)?;
    println!(
        "first cycles of a sample path: {:?}\n",
        &pairs[..pairs.len().min(5)]
    );

    let reports = dependent_coverage_multi(
        &spec,
        &Method::ALL,
        Approach::Regenerative,
        10,
        100,
        None,
        0.1,
        5_000,
        2,
    )?;
    println!("regenerative coverage (K=10, 100 cycles per batch, nominal 90%):");
    for r in &reports {
        println!(
            "  {:<11} {:.4} +/- {:.4}",
            r.method.tag(),
            r.coverage,
            r.mc_halfwidth
        );
    }

    // --- gap batching on AR(1) ---
    let ar = ChainSpec::new(Chain::Ar1 {
        rho: 0.5,
        innovation_sd: 1.0,
    })?;
    println!("\nAR(1) rho = 0.5, gap batching (K=10, n=50, nominal 90%):");
    for gap in [Some(0u32), None] {
        let r = dependent_coverage(
            &ar,
            Method::Batching,
            Approach::Gap,
            10,
            50,
            gap,
            0.1,
            20_000,
            3,
        )?;
        println!(
            "  gap = {:>4}: coverage {:.4}",
            gap.map(|g| g.to_string()).unwrap_or_else(|| "sqrt".into()),
            r.coverage
        );
    }

    // --- M/M/1 waiting times: cycles start at the empty state ---
    let mm1 = ChainSpec::new(Chain::Mm1Waiting {
        arrival: 0.5,
        service: 1.0,
    })?;
    let traj = simulate_trajectory(&mm1, 2_000, 4)?;
    let cycles = regenerative_pairs(&traj, |w| *w == 0.0, |w| *w)?;
    let mean_tau = cycles.iter().map(|c| c.tau as f64).sum::<f64>() / cycles.len() as f64;
    println!(
        "\nM/M/1 (rho = 0.5): {} cycles from 2000 steps, mean cycle length {:.2} (theory {:.2})",
        cycles.len(),
        mean_tau,
        mm1.expected_cycle_length().unwrap()
    );
    Ok(())
}
