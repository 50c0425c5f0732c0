use critbbm::simulate::{estimate, estimate_from, simulate_batch, simulate_once, SnakeConfig, Statistic, Stepping};
use critbbm::{hitting, Offspring};

fn fixed(y0: f64, seed: u64) -> SnakeConfig {
    let mut c = SnakeConfig::new(Offspring::moranian(), y0, 2e-3, seed);
    c.stepping = Stepping::Fixed;
    c.max_births = 200_000;
    c
}

#[test]
fn coupled_maximum_grows_with_start() {
    let (lo, hi) = (fixed(0.8, 5), fixed(1.3, 5));
    let mut strictly = 0;
    for run in 0..1000 {
        let a = simulate_once(&lo, run);
        let b = simulate_once(&hi, run);
        if a.truncated || b.truncated {
            continue;
        }
        assert!(a.m + 0.5 <= b.m + 1e-9, "run {run}: {} vs {}", a.m, b.m);
        // shifting every path by 0.5 keeps every surviving particle alive
        assert!(b.births >= a.births, "run {run}");
        strictly += usize::from(b.births > a.births);
    }
    assert!(strictly > 0);
}

#[test]
fn killed_count_grows_stochastically_with_start() {
    // E[N] = 1 for every start, so only the law moves: P(N >= 1) falls and
    // the conditional size grows
    let n = 4000;
    let small = simulate_batch(&SnakeConfig::new(Offspring::moranian(), 0.5, 1e-4, 3), n).unwrap();
    let large = simulate_batch(&SnakeConfig::new(Offspring::moranian(), 3.0, 1e-4, 3), n).unwrap();
    let any = |v: &[critbbm::simulate::SimOutcome]| estimate_from(v, Statistic::KilledAtLeast(1)).unwrap().mean;
    assert!(any(&small) > any(&large));
    let m_small = estimate_from(&small, Statistic::HitLevel(4.0)).unwrap().mean;
    let m_large = estimate_from(&large, Statistic::HitLevel(4.0)).unwrap().mean;
    assert!(m_small < m_large);
}

#[test]
fn killing_only_lowers_the_maximum() {
    let killed = fixed(1.0, 11);
    let mut free = fixed(1.0, 11);
    free.killing = false;
    free.max_births = 20_000;
    for run in 0..300 {
        let a = simulate_once(&killed, run);
        let b = simulate_once(&free, run);
        if b.truncated {
            continue;
        }
        assert!(a.m <= b.m, "run {run}: {} vs {}", a.m, b.m);
        assert_eq!(b.n, 0);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = SnakeConfig::new(Offspring::moranian(), 1.0, 1e-4, 42);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| simulate_batch(&cfg, 500).unwrap());
    let b = wide.install(|| simulate_batch(&cfg, 500).unwrap());
    assert_eq!(a, b);
}

#[test]
fn step_refinement_is_within_noise() {
    let n = 100_000;
    let coarse = SnakeConfig::new(Offspring::moranian(), 1.0, 4e-4, 7);
    let fine = SnakeConfig::new(Offspring::moranian(), 1.0, 1e-4, 8);
    let a = simulate_batch(&coarse, n).unwrap();
    let b = simulate_batch(&fine, n).unwrap();
    for stat in [Statistic::KilledAtLeast(1), Statistic::HitLevel(3.0), Statistic::MeanKilled] {
        let (ea, eb) = (estimate_from(&a, stat).unwrap(), estimate_from(&b, stat).unwrap());
        let band = 3.0 * (ea.std_error.powi(2) + eb.std_error.powi(2)).sqrt();
        assert!((ea.mean - eb.mean).abs() <= band, "{stat:?}: {} vs {}", ea.mean, eb.mean);
    }
}

#[test]
fn truncation_is_rare() {
    let cfg = SnakeConfig::new(Offspring::moranian(), 5.0, 1e-4, 13);
    let out = simulate_batch(&cfg, 2000).unwrap();
    let truncated = out.iter().filter(|o| o.truncated).count();
    assert!(truncated <= 1, "{truncated} of 2000");
}

#[test]
fn hit_probability_for_general_law() {
    let d = Offspring::new(&[0.4, 0.3, 0.2, 0.1]).unwrap();
    let cfg = SnakeConfig::new(d.clone(), 1.0, 1e-4, 99);
    let e = estimate(&cfg, Statistic::HitLevel(2.5), 20_000).unwrap();
    let u = hitting::general_hit_prob(&d, 2.5, 1.0).unwrap();
    assert!(e.covers(u), "{} ± {} vs {u}", e.mean, e.std_error);
    let n = estimate(&cfg, Statistic::MeanKilled, 20_000).unwrap();
    assert!(n.covers(1.0), "{} ± {}", n.mean, n.std_error);
}
