use frontfix::oracle::{crr_american_put, BinomialConfig};
use frontfix::{MarketParams, Preset};

#[test]
fn lattice_converges_at_first_order() {
    let p = Preset::ExC.params::<f64>();
    let v = |n| crr_american_put(&p, 100.0, BinomialConfig { steps: n }).unwrap();
    let (a, b, c) = (v(500), v(1000), v(2000));
    assert!((a - b).abs() < 4.0 * (b - c).abs(), "{a} {b} {c}");
}

#[test]
fn lattice_respects_no_arbitrage_bounds() {
    let p = MarketParams::new(100.0, 0.08, 0.25, 0.5).unwrap();
    let cfg = BinomialConfig { steps: 600 };
    let mut prev = f64::INFINITY;
    for k in 0..40 {
        let s0 = 50.0 + 3.0 * k as f64;
        let v = crr_american_put(&p, s0, cfg).unwrap();
        assert!(v >= (100.0 - s0).max(0.0) - 1e-12);
        assert!(v <= 100.0);
        assert!(v <= prev + 1e-12);
        prev = v;
    }
}

#[test]
fn deep_in_the_money_exercises_immediately() {
    let p = Preset::ExC.params::<f64>();
    let v = crr_american_put(&p, 40.0, BinomialConfig { steps: 800 }).unwrap();
    assert!((v - 60.0).abs() < 1e-12);
}
