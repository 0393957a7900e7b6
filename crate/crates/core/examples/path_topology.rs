//! Path-space tools: M1 distance on non-decreasing paths, composition with
//! time changes, the Skorokhod reflection map and decorated graphs.

use volterra_clocks::cadlag::{
    d_frak, decorated_limit_check, m1_distance_up, skorokhod_map, CadlagPath, ContinuousPath, DecoratedPath, TimeChangedPath,
};

fn ramp(n: f64) -> volterra_clocks::Result<CadlagPath> {
    CadlagPath::continuous(vec![0.0, 0.5 - 0.5 / n, 0.5 + 0.5 / n, 1.0], vec![0.0, 0.0, 1.0, 1.0])
}

fn main() -> volterra_clocks::Result<()> {
    let step = CadlagPath::step(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 1.0])?;
    println!("continuous ramps against the unit step:");
    for n in [2.0, 8.0, 32.0, 128.0] {
        println!("  width {:<8} M1 {:.5}   sup {:.3}", 1.0 / n, m1_distance_up(&ramp(n)?, &step)?, 0.5);
    }

    // A Brownian-like profile seen through a clock with one jump.
    let phi = ContinuousPath::from_fn(2.0, 2000, |s| (9.0 * s).sin() * 0.4 - 0.3 * s)?;
    let tau = CadlagPath::new(vec![0.0, 0.4, 1.0], vec![0.0, 0.6, 1.8], vec![0.0, 1.2, 1.8])?;
    let tc = TimeChangedPath::new(phi, tau)?;
    let x = tc.compose();
    let (lo, hi) = tc.jump_range(0.4);
    println!("\nφ∘τ jumps at {:?}; decoration at 0.4 spans [{lo:.4}, {hi:.4}]", x.jump_times());

    let (l, hat) = skorokhod_map(&x);
    println!("Skorokhod map: regulator L(1) = {:.4}, reflected path at 1 = {:.4}", l.value(1.0), hat.value(1.0));

    let target = tc.decorated();
    let embedded = DecoratedPath::embed(x.clone());
    println!("d_frak(embedded φ∘τ, decorated φ∘τ) = {:.4}", d_frak(&embedded, &target));

    // Continuous approximations: τ with the jump smeared over 1/n.
    let seq: Vec<CadlagPath> = [8.0, 32.0, 128.0, 512.0]
        .iter()
        .map(|n| {
            let tn = CadlagPath::from_fn(1.0, 4000, |t| {
                if t <= 0.4 {
                    1.5 * t
                } else {
                    (0.6 + 0.6 * n * (t - 0.4)).min(1.2 + (t - 0.4))
                }
            })?;
            Ok(TimeChangedPath::new(tc.phi.clone(), tn)?.compose())
        })
        .collect::<volterra_clocks::Result<_>>()?;
    let rep = decorated_limit_check(&seq, &target, &[0.2, 0.4, 0.8], &[0.1, 0.05, 0.02]);
    for row in &rep.rows {
        println!("  probe {:.2}: tail distances {:?} decays {}", row.t, row.tail, row.decays);
    }
    Ok(())
}
