use proptest::prelude::*;
use tdho::dilation::dilate;
use tdho::propagator::evolve_free;
use tdho::snapshot::{read_snapshot, write_snapshot};
use tdho::states::make_gaussian;
use tdho::{Complex64, Grid, WaveFunction};

fn gaussian_at(grid: Grid, center: f64, p: f64, width: f64) -> WaveFunction {
    make_gaussian(grid, &[center], &[p], width).unwrap()
}

#[test]
fn grid_layout() {
    let g = Grid::new(1, 8, 2.0).unwrap();
    assert_eq!(g.x(0), -2.0);
    assert_eq!(g.dx(), 0.5);
    assert!((g.dp() - std::f64::consts::PI / 2.0).abs() < 1e-15);
    let p = g.momenta();
    assert_eq!(p[0], 0.0);
    assert!((p[4] + g.p_max()).abs() < 1e-12);
    assert!(Grid::new(1, 7, 1.0).is_err());
    assert!(Grid::new(4, 8, 1.0).is_err());
}

#[test]
fn dilation_matches_rescaled_gaussian() {
    let grid = Grid::new(1, 1024, 30.0).unwrap();
    let psi = gaussian_at(grid, 1.0, 0.7, 1.2);
    for beta in [-0.3, 0.2, 0.6] {
        let scale = (-2.0f64 * beta).exp();
        // e^{-beta} psi(e^{-2 beta} x), evaluated from the closed form
        let exact = WaveFunction::from_fn(grid, |x| {
            let y = scale * x[0];
            let norm = (std::f64::consts::PI * 1.44).powf(-0.25);
            Complex64::from_polar(norm * (-(y - 1.0).powi(2) / 2.88).exp(), 0.7 * y) * (-beta).exp()
        });
        let d = dilate(&psi, beta).unwrap();
        assert!(d.distance(&exact) < 1e-10, "beta {beta}: {}", d.distance(&exact));
    }
}

#[test]
fn dilation_group_law_and_limits() {
    let grid = Grid::new(2, 128, 12.0).unwrap();
    let psi = make_gaussian(grid, &[0.5, -1.0], &[0.3, 0.4], 1.0).unwrap();
    let two = dilate(&dilate(&psi, 0.15).unwrap(), 0.1).unwrap();
    let one = dilate(&psi, 0.25).unwrap();
    assert!(two.distance(&one) < 1e-10);
    assert!(dilate(&psi, 3.0).is_err());
}

#[test]
fn snapshot_roundtrip_through_file() {
    let grid = Grid::new(1, 64, 5.0).unwrap();
    let psi = gaussian_at(grid, 0.0, 1.0, 0.8).with_time_tag(-3.0);
    let dir = std::env::temp_dir().join(format!("tdho-snap-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("psi.bin");
    write_snapshot(&psi, std::fs::File::create(&path).unwrap()).unwrap();
    let back = read_snapshot(std::fs::File::open(&path).unwrap()).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(back, psi);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(center in -3.0f64..3.0, p in -2.0f64..2.0, width in 0.7f64..2.0) {
        let psi = gaussian_at(Grid::new(1, 256, 20.0).unwrap(), center, p, width);
        prop_assert!((psi.momentum_norm_sqr() - psi.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn dilation_is_unitary(beta in -0.8f64..0.8, center in -1.0f64..1.0, p in -1.0f64..1.0) {
        let psi = gaussian_at(Grid::new(1, 1024, 40.0).unwrap(), center, p, 1.0);
        let d = dilate(&psi, beta).unwrap();
        prop_assert!((d.norm() - 1.0).abs() < 1e-12);
        let back = dilate(&d, -beta).unwrap();
        prop_assert!(back.distance(&psi) < 1e-10);
    }

    #[test]
    fn free_evolution_is_unitary_and_additive(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let psi = gaussian_at(Grid::new(1, 256, 20.0).unwrap(), 0.5, 0.5, 1.0);
        let one = evolve_free(1.0, &evolve_free(1.0, &psi, 0.0, a), a, a + b);
        let two = evolve_free(1.0, &psi, 0.0, a + b);
        prop_assert!((one.norm() - 1.0).abs() < 1e-12);
        prop_assert!(one.distance(&two) < 1e-11);
    }

    #[test]
    fn snapshot_is_bit_exact(seed in any::<u64>(), t in -1e6f64..1e6) {
        let grid = Grid::new(1, 32, 3.0).unwrap();
        let mut s = seed;
        let amps = (0..32)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                Complex64::new((s >> 11) as f64 / 2f64.powi(53) - 0.5, (s >> 20) as f64 / 2f64.powi(44))
            })
            .collect();
        let psi = WaveFunction::new(grid, amps, t).unwrap();
        let mut bytes = Vec::new();
        write_snapshot(&psi, &mut bytes).unwrap();
        prop_assert_eq!(read_snapshot(bytes.as_slice()).unwrap(), psi);
    }
}
