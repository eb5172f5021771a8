//! rho is setting-independent, mu is not: the exhaustive audit at p = 4.

use istlab::bell::{
    audit_settings, check_si_mu, check_si_rho_exact, check_si_rho_sampled, counterfactual_audit, AuditGrid, Generator,
    SupermeasuredMu, TrivialMu,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = AuditGrid::new(4, 2);
    let mu = SupermeasuredMu::new(4, audit_settings(4));
    let hidden = grid.hidden_variables()?;

    let cf = counterfactual_audit(&grid, &mu)?;
    println!(
        "counterfactual: {} lambdas, {} admissible triples, {} violations, compliance {:.0}%",
        cf.lambdas,
        cf.admissible_triples,
        cf.violations,
        100.0 * cf.compliance
    );

    let rho = check_si_rho_exact(&hidden)?;
    println!("rho independence (exact): sub-ensembles {:?}, equal marginals: {}", rho.sub_ensemble_sizes, rho.passed);
    let sampled = check_si_rho_sampled(&grid, 100_000, 2024, 0.01)?;
    let chi = sampled.chi_square.as_ref().expect("sampled mode");
    println!("rho independence (sampled): chi2 = {:.2} on {} dof, p-value {:.3}", chi.statistic, chi.dof, chi.p_value);

    let si_mu = check_si_mu(&grid, &mu)?;
    println!("mu dependence fraction: {}", si_mu.dependence_fraction);
    if let Some(w) = &si_mu.witness {
        println!("  witness lambda {:?}: mu{:?} = {}, mu{:?} = {}", w.lambda, w.setting, w.mu.num, w.flipped, w.mu_flipped.num);
    }
    println!("control mu = 1: dependence fraction {}", check_si_mu(&grid, &TrivialMu)?.dependence_fraction);

    let skewed = AuditGrid { generator: Generator::Adversarial, ..AuditGrid::new(4, 2) };
    println!("adversarial generator passes rho check: {}", check_si_rho_exact(&skewed.hidden_variables()?)?.passed);
    Ok(())
}
