use spectrafw::baselines::{run_baseline, Algo, BaselineConfig};
use spectrafw::bench::floored_log10;
use spectrafw::linalg::SymMat;
use spectrafw::sensing::{default_beta, generate_problem, reference_solution, SensingOracle};
use spectrafw::solver::SolverConfig;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("c5");
    match which {
        "c5" => c5(),
        "c7" => c7(),
        "c8" => c8(),
        "feas" => feas(),
        _ => eprintln!("unknown: {which}"),
    }
}

fn run(
    algo: Algo,
    n: usize,
    r: usize,
    mf: usize,
    tau: f64,
    noise: bool,
    seed: u64,
    iters: usize,
) -> (Vec<f64>, f64, f64, bool) {
    let m = mf * n * r;
    let p = generate_problem(n, r, m, tau, noise, seed).unwrap();
    let t0 = Instant::now();
    let reference = reference_solution(&p, default_beta(n), 3000);
    let t_ref = t0.elapsed().as_secs_f64();
    let oracle = SensingOracle::with_beta(&p, default_beta(n));
    let mut cfg = SolverConfig::new(default_beta(n));
    cfg.max_iters = iters;
    cfg.gap_tol = f64::NEG_INFINITY;
    cfg.seed = seed;
    let mut bc = BaselineConfig::new(algo, cfg);
    if algo == Algo::BlockFw {
        bc.block_r = r;
        bc.block_eta = 0.3;
    }
    let t1 = Instant::now();
    let run =
        run_baseline(SymMat::identity(n).scaled(1.0 / n as f64), &oracle, &bc, |_, _| {}).unwrap();
    let t_run = t1.elapsed().as_secs_f64();
    let errs: Vec<f64> = run.trace.iter().map(|r| r.f_value - reference.f).collect();
    eprintln!(
        "  {:?} n={n} r={r} iters={}: ref {:.1}s (trusted {}, f {:.6e}), run {:.1}s, final err {:.3e}, updates {}",
        algo,
        run.trace.len(),
        t_ref,
        reference.trusted(),
        reference.f,
        t_run,
        errs.last().unwrap(),
        run.trace.iter().map(|r| r.rank1_updates).last().unwrap_or(0),
    );
    (errs, reference.f, t_ref + t_run, run.converged)
}

fn c5() {
    for r in [1usize, 2, 5] {
        for algo in [Algo::Alg1, Algo::Fw] {
            let (errs, ref_f, _t, _c) = run(algo, 60, r, 15, 0.5, true, 1, 400);
            // print log10 error at a few checkpoints
            let pts: Vec<String> = [49usize, 99, 199, 299, 399]
                .iter()
                .filter(|&&i| i < errs.len())
                .map(|&i| format!("t{}={:.2}", i + 1, floored_log10(errs[i])))
                .collect();
            eprintln!("    ref_f={ref_f:.3e} log10err: {}", pts.join(" "));
        }
    }
}

fn c7() {
    let (n, r, mf) = (60usize, 10usize, 20usize);
    let p = generate_problem(n, r, mf * n * r, 0.5, true, 1).unwrap();
    let t_est = Instant::now();
    let beta = SensingOracle::new(&p).estimate_beta(40, 1);
    eprintln!(
        "  estimated beta {beta:.4e} in {:.1}s (working {:.3e}, certified {:.3e})",
        t_est.elapsed().as_secs_f64(),
        default_beta(n),
        SensingOracle::new(&p).beta_bound()
    );
    let t0 = Instant::now();
    let reference = reference_solution(&p, beta, 3000);
    eprintln!(
        "  ref with certified beta: {:.1}s trusted {} f {:.6e} gap {:.3e}",
        t0.elapsed().as_secs_f64(),
        reference.trusted(),
        reference.f,
        reference.gap
    );
    let oracle = SensingOracle::with_beta(&p, beta);
    for algo in [Algo::Alg1, Algo::BlockFw] {
        let mut cfg = SolverConfig::new(beta);
        cfg.max_iters = 300;
        cfg.gap_tol = f64::NEG_INFINITY;
        let mut bc = BaselineConfig::new(algo, cfg);
        bc.block_r = r;
        bc.block_eta = 0.3;
        let t1 = Instant::now();
        let run = run_baseline(SymMat::identity(n).scaled(1.0 / n as f64), &oracle, &bc, |_, _| {})
            .unwrap();
        let errs: Vec<f64> = run.trace.iter().map(|row| row.f_value - reference.f).collect();
        let pts: Vec<String> = [49usize, 99, 199, 299]
            .iter()
            .filter(|&&i| i < errs.len())
            .map(|&i| format!("t{}={:.2}", i + 1, floored_log10(errs[i])))
            .collect();
        eprintln!(
            "  {:?} {:.1}s updates {} log10err: {}",
            algo,
            t1.elapsed().as_secs_f64(),
            run.trace.last().map(|r| r.rank1_updates).unwrap_or(0),
            pts.join(" ")
        );
    }
}

fn c8() {
    for algo in [Algo::Alg1, Algo::Fw] {
        let (errs, ref_f, _t, _c) = run(algo, 60, 3, 10, 1.0, false, 1, 400);
        let pts: Vec<String> = [49usize, 99, 199, 299, 399]
            .iter()
            .filter(|&&i| i < errs.len())
            .map(|&i| format!("t{}={:.2}", i + 1, floored_log10(errs[i])))
            .collect();
        eprintln!("    ref_f={ref_f:.3e} log10err: {}", pts.join(" "));
    }
}

fn feas() {
    let t0 = Instant::now();
    for algo in [Algo::Alg1, Algo::Fw, Algo::BlockFw, Algo::Alg1Away, Algo::Alg1NoDrop, Algo::Alg1Det]
    {
        let m = 15 * 50 * 5;
        let p = generate_problem(50, 5, m, 0.5, true, 2).unwrap();
        let oracle = SensingOracle::with_beta(&p, default_beta(50));
        let mut cfg = SolverConfig::new(default_beta(50));
        cfg.max_iters = 200;
        cfg.gap_tol = f64::NEG_INFINITY;
        let mut bc = BaselineConfig::new(algo, cfg);
        bc.block_r = 5;
        let t1 = Instant::now();
        let mut audited = 0usize;
        let _ = run_baseline(
            SymMat::identity(50).scaled(0.02),
            &oracle,
            &bc,
            |state, _| {
                let d = spectrafw::linalg::full_eigendecomposition(state.x()).unwrap();
                audited += 1;
                let min = d.values.last().copied().unwrap();
                assert!(min > -1e-9 && (state.x().trace() - 1.0).abs() < 1e-9);
            },
        )
        .unwrap();
        eprintln!("  {:?}: {:.1}s, {} iterates audited", algo, t1.elapsed().as_secs_f64(), audited);
    }
    eprintln!("  feasibility cell total {:.1}s (one n=50 instance, 6 algos)", t0.elapsed().as_secs_f64());
}
