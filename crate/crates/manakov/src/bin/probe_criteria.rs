use manakov::experiments::{as_convergence, ASOrderConfig, ErrorSweepConfig};
use manakov::field::{Grid1D, InitialCondition};
use manakov::integrators::{Problem, SchemeKind};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let gamma: f64 = args[1].parse().unwrap();
    let seed: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2024);
    let sweep = ErrorSweepConfig {
        grid: Grid1D::periodic(20.0 * std::f64::consts::PI, 1 << 8).unwrap(),
        problem: Problem::half_dispersion(gamma),
        initial: InitialCondition::standard_soliton(),
        horizon: 1.0,
        n_ref: 1 << 13,
        n_sweep: vec![32, 64, 128, 256, 512, 1024],
        samples: 50,
        seed,
        workers: 0,
        schemes: SchemeKind::ALL.to_vec(),
        fixed_point_tol: 1e-12,
        max_fixed_point_iters: 100,
        blowup_threshold: 500.0,
    };
    let cfg = ASOrderConfig { sweep, deltas: vec![0.4, 0.45, 0.5, 0.55, 0.6] };
    let t0 = std::time::Instant::now();
    for est in &as_convergence(&cfg).unwrap() {
        let am = est.mean.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        let ad = est.median.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        print!("{:?}: argmin mean {} med {} | p: ", est.scheme, cfg.deltas[am], cfg.deltas[ad]);
        for (d, t) in &est.t_tests { print!("{d}:{:.2e} ", t.p_value); }
        println!();
    }
    println!("wall {:?}", t0.elapsed());
}
