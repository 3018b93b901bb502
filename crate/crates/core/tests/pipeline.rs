use teig_core::eigen::{self, ShiftInvertConfig};
use teig_core::harness;
use teig_core::mesh::{generate, read_mesh, write_mesh, DomainSpec, Mesh};
use teig_core::{MaterialModel, ReducedPencil};

fn mesh(domain: &str, level: i32) -> Mesh {
    generate(&DomainSpec::from_name(domain).unwrap(), level).unwrap()
}

fn first_k(mesh: &Mesh, material: &str, count: usize) -> Vec<f64> {
    let (_, sol) = eigen::solve(mesh, &MaterialModel::preset(material).unwrap(), &ShiftInvertConfig::with_count(count)).unwrap();
    sol.smallest_real().iter().map(|p| p.k.unwrap()).collect()
}

#[test]
fn mesh_file_round_trip_gives_the_same_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("disk.mesh");
    let m = mesh("disk", 1);
    write_mesh(&m, &path).unwrap();
    let (back, report) = read_mesh(&path).unwrap();
    assert_eq!(report.reoriented_cells, 0);
    let (a, b) = (first_k(&m, "A1", 2), first_k(&back, "A1", 2));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-10 * x, "{x} vs {y}");
    }
}

#[test]
fn default_shift_on_the_square() {
    let sigma = eigen::default_shift(&mesh("square", 3), &MaterialModel::preset("A1").unwrap()).unwrap();
    assert!((sigma - 0.99 * 2.0 * std::f64::consts::PI.powi(2) / 4.0).abs() < 0.01, "{sigma}");
}

#[test]
fn every_reported_pair_meets_the_tolerance() {
    let cfg = ShiftInvertConfig::with_count(4);
    for (domain, level, material) in [("square", 1, "A3"), ("lshape", 0, "A4"), ("annulus", 0, "A2")] {
        let (_, sol) = eigen::solve(&mesh(domain, level), &MaterialModel::preset(material).unwrap(), &cfg).unwrap();
        assert!(sol.is_complete(), "{domain}");
        for p in sol.pairs.iter().filter(|p| p.converged) {
            assert!(p.residual <= cfg.tol);
        }
        assert!(sol.smallest_real().windows(2).all(|w| w[0].lambda.re <= w[1].lambda.re));
    }
}

#[test]
fn complex_eigenvalues_come_in_conjugate_pairs() {
    let (_, sol) = eigen::solve(&mesh("square", 0), &MaterialModel::preset("A1").unwrap(), &ShiftInvertConfig::with_count(3)).unwrap();
    let complex: Vec<_> = sol.complex().filter(|p| p.converged).map(|p| p.lambda).collect();
    assert!(!complex.is_empty());
    for z in &complex {
        let partner = complex.iter().map(|w| (w - z.conj()).norm() / z.norm()).fold(f64::INFINITY, f64::min);
        // the partner may sit just outside the returned window
        let in_window = complex.iter().any(|w| w.norm() > z.norm() * (1.0 + 1e-6));
        assert!(partner < 1e-8 || !in_window, "{z} has no conjugate");
    }
}

#[test]
fn regime_two_ball_is_above_its_bound() {
    let m = mesh("ball", -1);
    let a = MaterialModel::preset("A5").unwrap();
    let kappa1 = eigen::dirichlet_eigenvalue(&m).unwrap();
    let (_, sol) = eigen::solve(&m, &a, &ShiftInvertConfig::with_count(2)).unwrap();
    assert_eq!(a.eigenvalue_bound(), 1.0);
    assert!(sol.is_complete());
    for p in sol.smallest_real() {
        assert!(p.lambda.re >= kappa1 * 0.98, "{} below {kappa1}", p.lambda.re);
    }
}

#[test]
fn anisotropic_square_decreases_toward_the_published_value() {
    let r = harness::run_convergence(
        &DomainSpec::from_name("square").unwrap(),
        &MaterialModel::preset("A2").unwrap(),
        1..=3,
        &ShiftInvertConfig::with_count(1),
        false,
    )
    .unwrap();
    assert!(r.is_monotone(0));
    let k = r.richardson(0).unwrap().sqrt();
    assert!((k - 4.3867).abs() < 2e-2, "{k}");
}

#[test]
fn matrix_market_export() {
    let dir = tempfile::tempdir().unwrap();
    let rp = ReducedPencil::assemble(&mesh("square", -1), &MaterialModel::preset("A1").unwrap()).unwrap();
    let path = dir.path().join("k.mtx");
    rp.k.write_matrix_market(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
    let size: Vec<usize> = text.lines().find(|l| !l.starts_with('%')).unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(&size[..2], &[rp.n(), rp.n()]);
}

#[test]
fn preset_reports_serialize() {
    let reports = harness::run_preset("ex6", Some(-1), &ShiftInvertConfig::default()).unwrap();
    assert_eq!(reports.len(), 3);
    let dir = tempfile::tempdir().unwrap();
    for r in &reports {
        assert_eq!(r.count(), 6);
        let csv = dir.path().join(format!("{}.csv", r.material));
        harness::emit_csv(r, &csv).unwrap();
        harness::emit_json(r, dir.path().join(format!("{}.json", r.material))).unwrap();
        harness::emit_plotdata(r, dir.path().join(format!("{}.plot", r.material))).unwrap();
        assert!(std::fs::read_to_string(csv).unwrap().lines().count() > 1);
    }
}
