//! Kernel families, their numerical resolvents and the Dirac scaling of `nK(n·)`.

use volterra_clocks::kernels::dirac_family_check;
use volterra_clocks::resolvent::{
    check_resolvent_mass, resolvent_closed_form, resolvent_numeric, resolvent_scaled_laplace_check,
};
use volterra_clocks::{discretize, KernelSpec};

fn main() -> volterra_clocks::Result<()> {
    let (dt, horizon) = (1e-3, 2.0);
    let kernels = [
        KernelSpec::exponential(1.0, -1.0)?,
        KernelSpec::fractional(1.0, 0.5)?,
        KernelSpec::gamma(2.0, -0.5, 0.7)?,
        KernelSpec::constant(1.0)?,
    ];
    println!("{:<36} {:>12} {:>12} {:>12}", "kernel", "residual", "R(T)", "vs closed");
    for k in &kernels {
        let r = resolvent_numeric(&discretize(k, dt, horizon)?)?;
        let closed = resolvent_closed_form(k)?.cell_averages(dt, r.values.len())?;
        let last = r.values.len() - 1;
        let rel = (r.values[last] - closed[last]).abs() / closed[last].abs();
        println!("{:<36} {:>12.2e} {:>12.6} {:>12.2e}", k.to_string(), r.residual, r.total_mass(), rel);
        if k.is_completely_monotone() {
            let m = check_resolvent_mass(&r, true, 1e-8)?;
            assert!(m.ok(), "{k}: {m:?}");
        }
    }

    let base = KernelSpec::exponential(1.0, -1.0)?;
    let rep = dirac_family_check(&base, &[1.0, 10.0, 100.0, 1000.0], &[0.5, 1.0, 5.0])?;
    println!("\n|K̂(λ/n) − K̂(0)|, ‖K‖₁ = {}", rep.l1_norm);
    for row in &rep.rows {
        println!("  n = {:>6}  λ = {:>3}  {:.3e}", row.n, row.lambda, row.deviation);
    }
    println!("\n|R̂ⁿ(λ) − 1| for the resolvent of nK");
    for n in [1.0, 10.0, 100.0, 1000.0] {
        let r = resolvent_scaled_laplace_check(&base, n, &[0.5, 1.0, 5.0], 1e-2 / n, 40.0 / n)?;
        println!("  n = {n:>6}  {:.3e}  (transform error {:.1e})", r.distance_from_one(), r.max_rel_error());
    }
    Ok(())
}
