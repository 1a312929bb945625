use block_smoo_web::{run_fronts, run_rate, run_trajectory, true_front, START};

#[test]
fn trajectory_starts_at_start_and_records_every_step() {
    let t = run_trajectory([2, 1], 2, 0.05, 50, 0.0, 1).unwrap();
    assert_eq!(t.path[0], START);
    // one point per inner step: 50 cycles x 2 blocks x 3 steps, plus the start
    assert_eq!(t.path.len(), 1 + 50 * 2 * 3);
    assert_eq!(t.weighted.len(), 51);
    let last = t.path.last().unwrap();
    let dist = ((last[0] - t.minimizer[0]).powi(2) + (last[1] - t.minimizer[1]).powi(2)).sqrt();
    assert!(dist < 0.2, "{dist}");
    assert!(*t.weighted.last().unwrap() < t.weighted[0]);
}

#[test]
fn minimizer_interpolates_centers() {
    // per coordinate the minimizer is Σ w_k a_k c_k / Σ w_k a_k = (-1 + 4) / 5
    let t = run_trajectory([1, 1], 1, 0.1, 1, 0.0, 0).unwrap();
    assert!((t.minimizer[0] - 0.6).abs() < 1e-12 && (t.minimizer[1] - 0.6).abs() < 1e-12);
}

#[test]
fn trajectory_rejects_bad_input() {
    assert!(run_trajectory([0, 0], 1, 0.1, 10, 0.0, 0).is_err());
    assert!(run_trajectory([1, 1], 3, 0.1, 10, 0.0, 0).is_err());
    assert!(run_trajectory([1, 1], 1, -0.1, 10, 0.0, 0).is_err());
    assert!(run_trajectory([1, 1], 1, 0.1, 10_000, 0.0, 0).is_err());
}

#[test]
fn fronts_cover_every_vector_and_score_in_range() {
    let f = run_fronts(6, 400, 0.05, 0.05, 3).unwrap();
    assert_eq!(f.fronts.len(), 2);
    for front in &f.fronts {
        assert_eq!(front.points.len(), 7);
    }
    for m in &f.metrics.methods {
        let purity = m.purity.unwrap();
        assert!((0.0..=1.0).contains(&purity));
    }
    // the exact front runs from f2 = 0 at m1 = 0 to f1 = 0 at m1 = p
    let truth = true_front(10);
    assert!(truth[0][1].abs() < 1e-12 && truth[10][0].abs() < 1e-12);
}

#[test]
fn rate_reports_slope() {
    let r = run_rate("pl", 4, 2024).unwrap();
    assert_eq!(r.fit.levels.len(), 5);
    assert!(r.fit.slope < 0.0);
    assert!(run_rate("bogus", 4, 0).is_err());
}
