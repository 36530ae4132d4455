use sindybench_core::metrics::largest_lyapunov;
use sindybench_core::simulate::integrate;
use sindybench_core::systems::{builtin_registry, builtin_system};

#[test]
fn registry_contract() {
    let reg = builtin_registry();
    assert!(reg.len() >= 10);
    assert!(reg.iter().any(|s| s.dimension() == 4));
    for sys in &reg {
        assert!(matches!(sys.dimension(), 3 | 4), "{}", sys.name());
        assert_eq!(sys.basis().max_degree(), 4, "{}", sys.name());
        assert!(sys.effective_degree() <= 4);
        assert!(sys.reference_ics().len() >= 10, "{}", sys.name());
        assert!(!sys.citation().is_empty());
    }
    let mut names: Vec<&str> = reg.iter().map(|s| s.name()).collect();
    names.sort_unstable();
    names.dedup();
    assert_eq!(names.len(), reg.len());
}

#[test]
fn lorenz_has_seven_terms() {
    let lorenz = builtin_system("Lorenz63").unwrap();
    assert_eq!(lorenz.nonzero_count(), 7);
    assert_eq!(lorenz.basis().len(), 35);
    assert!(builtin_system("lorenz63").is_some());
    assert!(builtin_system("NoSuchSystem").is_none());
}

#[test]
fn every_reference_ic_stays_bounded_for_ten_periods() {
    for sys in builtin_registry() {
        for ic in sys.reference_ics() {
            let t_end = 10.0 * sys.dominant_period();
            let sol = integrate(&sys, ic, t_end, 1e-10, 1e-12)
                .unwrap_or_else(|e| panic!("{}: {e}", sys.name()));
            for k in 0..=100 {
                let x = sol.eval(t_end * k as f64 / 100.0).unwrap();
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(norm < 1e6, "{} norm {norm}", sys.name());
            }
        }
    }
}

#[test]
fn every_system_is_chaotic() {
    for sys in builtin_registry() {
        let t = 500.0 * sys.dominant_period();
        let le = largest_lyapunov(&sys, t, sys.dominant_period(), 0).unwrap();
        assert!(le > 0.01, "{}: largest Lyapunov exponent {le}", sys.name());
    }
}
