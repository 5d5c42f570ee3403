//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.
//!
//! ```text
//! cargo test -p schoensdr-cli --test acceptance
//! ```

use std::process::Command;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use schoensdr::kernels::{gram, kernel_from_mixture, omega_p};
use schoensdr::numerics::{check_complete_monotone, linspace, ScalarFn, CM_STEP, CM_TOL};
use schoensdr::schoenberg::{certify_membership, psd_sweep, CertifyConfig, DEFAULT_DIMS, PSD_TOL};
use schoensdr::sdr::{default_gcv_grid, fit_sir, gcv_select};
use schoensdr::sim::{rep_rng, spearman, MethodStatus};
use schoensdr::{KernelCandidate, RadialKernel, ScaleMixture, SdrKind, Verdict};
use schoensdr_cli::tables::{run_cells, table_configs, CellRun};

const SEED: u64 = 7;
const REPS: usize = 100;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

fn cell<'a>(cells: &'a [CellRun], label: &str) -> &'a CellRun {
    cells
        .iter()
        .find(|c| c.label() == label)
        .unwrap_or_else(|| panic!("missing cell {label}"))
}

fn truth_mean(cells: &[CellRun], label: &str, m: SdrKind) -> f64 {
    cell(cells, label)
        .result
        .as_ref()
        .ok()
        .and_then(|r| r.summary(m))
        .map_or(f64::NAN, |s| s.cor_truth.mean)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn normal(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

fn criterion_1(t2: &[CellRun]) -> Check {
    let s = cell(t2, "S1-i")
        .result
        .as_ref()
        .ok()
        .and_then(|r| r.summary(SdrKind::Sir));
    let Some(s) = s else {
        return check(false, "SIR produced no results in S1-i");
    };
    let (t, r) = (s.cor_truth.mean, s.cor_response.mean);
    check(
        (0.922..=0.982).contains(&t) && (0.53..=0.65).contains(&r),
        format!("SIR S1-i truth {t:.3} in [0.922, 0.982], response {r:.3} in [0.53, 0.65]"),
    )
}

fn criterion_2(t2: &[CellRun]) -> Check {
    let targets = [
        (SdrKind::Ksir, 0.946),
        (SdrKind::Kcca, 0.944),
        (SdrKind::Gsir, 0.945),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, target) in targets {
        let got = truth_mean(t2, "S1-i", m);
        pass &= (got - target).abs() <= 0.08;
        parts.push(format!("{m} {got:.3} (target {target})"));
    }
    check(pass, format!("S1-i within 0.08: {}", parts.join(", ")))
}

fn criterion_3(t2: &[CellRun]) -> Check {
    let g = truth_mean(t2, "S2-iii", SdrKind::Gsir);
    let s = truth_mean(t2, "S2-iii", SdrKind::Sir);
    check(
        g <= s - 0.05,
        format!("S2-iii GSIR {g:.3} <= SIR {s:.3} - 0.05"),
    )
}

fn criterion_4(t2: &[CellRun], t3: &[CellRun]) -> Check {
    let fixed = truth_mean(t2, "S1-iii", SdrKind::Gsir);
    let gcv = truth_mean(t3, "S1-iii", SdrKind::Gsir);
    check(
        gcv - fixed >= 0.03,
        format!(
            "S1-iii GSIR GCV {gcv:.3} vs fixed {fixed:.3}, gain {:.3} >= 0.03",
            gcv - fixed
        ),
    )
}

fn criterion_5(t2: &[CellRun]) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for label in ["S1-i", "S1-ii", "S2-i", "S2-ii"] {
        let means: Vec<f64> = SdrKind::ALL
            .iter()
            .map(|&m| truth_mean(t2, label, m))
            .collect();
        let gap = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - means.iter().cloned().fold(f64::INFINITY, f64::min);
        pass &= gap <= 0.12;
        parts.push(format!("{label} {gap:.3}"));
    }
    check(
        pass,
        format!("max pairwise gap <= 0.12: {}", parts.join(", ")),
    )
}

fn table_one_kernels() -> Vec<RadialKernel> {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut out = Vec::new();
    for _ in 0..3 {
        out.push(RadialKernel::gaussian(rng.random_range(0.1..10.0)).unwrap());
        out.push(
            RadialKernel::matern(rng.random_range(0.2..5.0), rng.random_range(0.2..4.0)).unwrap(),
        );
        out.push(
            RadialKernel::generalized_cauchy(
                rng.random_range(0.2..5.0),
                rng.random_range(0.2..4.0),
                rng.random_range(0.1..=2.0),
            )
            .unwrap(),
        );
        out.push(
            RadialKernel::powered_exponential(
                rng.random_range(0.2..5.0),
                rng.random_range(0.1..=2.0),
            )
            .unwrap(),
        );
    }
    out
}

fn criterion_6() -> Check {
    let mut worst = f64::INFINITY;
    let mut worst_name = String::new();
    for k in table_one_kernels() {
        let name = k.to_string();
        let c = KernelCandidate::from_radial(k).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
            let map = match psd_sweep(&c, &DEFAULT_DIMS, 40, 1, &mut rng) {
                Ok(m) => m,
                Err(e) => return check(false, format!("{name}: {e}")),
            };
            for ratio in map.into_values() {
                if ratio < worst {
                    worst = ratio;
                    worst_name = name.clone();
                }
            }
        }
    }
    check(
        worst >= -PSD_TOL,
        format!("12 kernels x 5 dims x 5 seeds, worst min-eig ratio {worst:+.2e} ({worst_name})"),
    )
}

fn criterion_7() -> Check {
    let cfg = CertifyConfig::default();
    let gauss = certify_membership(
        &KernelCandidate::from_radial(RadialKernel::gaussian(1.0).unwrap()).unwrap(),
        &cfg,
    );
    let poly = certify_membership(&KernelCandidate::polynomial_order_one(), &cfg);
    let powexp = certify_membership(
        &KernelCandidate::from_radial(RadialKernel::powered_exponential(1.0, 2.0).unwrap())
            .unwrap(),
        &cfg,
    );
    check(
        gauss.verdict == Verdict::Member
            && poly.verdict == Verdict::NotRadial
            && poly.witness.is_some()
            && powexp.verdict == Verdict::Member,
        format!(
            "gaussian {}, poly1 {} (witness {}), powexp(alpha=2) {}",
            gauss.verdict,
            poly.verdict,
            if poly.witness.is_some() {
                "present"
            } else {
                "missing"
            },
            powexp.verdict
        ),
    )
}

fn criterion_8() -> Check {
    let mut err1: f64 = 0.0;
    let mut err3: f64 = 0.0;
    for t in linspace(0.01, 10.0, 100) {
        err1 = err1.max((omega_p(1, t).unwrap() - t.cos()).abs());
        err3 = err3.max((omega_p(3, t).unwrap() - t.sin() / t).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut err_mix: f64 = 0.0;
    for _ in 0..100 {
        let r: f64 = rng.random_range(0.1..3.0);
        let p = rng.random_range(1..=10);
        let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let zt: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let mix = kernel_from_mixture(ScaleMixture::new(vec![(r, 1.0)]).unwrap());
        let g = RadialKernel::gaussian(1.0 / (r * r)).unwrap();
        err_mix = err_mix.max((mix.eval(&z, &zt).unwrap() - g.eval(&z, &zt).unwrap()).abs());
    }
    check(
        err1 <= 1e-8 && err3 <= 1e-8 && err_mix <= 1e-14,
        format!(
            "omega_1 err {err1:.1e}, omega_3 err {err3:.1e}, single-atom mixture err {err_mix:.1e}"
        ),
    )
}

fn criterion_9() -> Check {
    let grid = linspace(0.1, 10.0, 100);
    let mut failing = Vec::new();
    for k in table_one_kernels() {
        let f = ScalarFn::new(|s| k.profile(s));
        match check_complete_monotone(&f, &grid, 6, CM_STEP, CM_TOL) {
            Ok(r) if r.passed => {}
            _ => failing.push(k.to_string()),
        }
    }
    let cos = ScalarFn::new(f64::cos);
    let cos_fails = !check_complete_monotone(&cos, &grid, 6, CM_STEP, CM_TOL)
        .unwrap()
        .passed;
    check(
        failing.is_empty() && cos_fails,
        format!(
            "12 profiles at order 6: {} failing{}; cos t {}",
            failing.len(),
            if failing.is_empty() {
                String::new()
            } else {
                format!(" ({})", failing.join(", "))
            },
            if cos_fails { "fails" } else { "passes" }
        ),
    )
}

fn criterion_10(t2: &[CellRun]) -> Check {
    let p = 20;
    let beta = DVector::from_fn(p, |i, _| if i < 2 { 1.0 / 2f64.sqrt() } else { 0.0 });
    let mut cors = Vec::new();
    for rep in 0..200 {
        let mut rng = rep_rng(1010, rep, 0);
        let x = normal(&mut rng, 500, p);
        let y: Vec<f64> = (&x * &beta)
            .iter()
            .map(|t| t * t + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let m = match fit_sir(&x, &y, 10, 1) {
            Ok(m) => m,
            Err(e) => return check(false, format!("SIR failed: {e}")),
        };
        let xt = normal(&mut rep_rng(1010, rep, 1), 500, p);
        let pred: Vec<f64> = m.predict(&xt).unwrap().column(0).iter().copied().collect();
        cors.push(spearman(&pred, (&xt * &beta).as_slice()).unwrap().abs());
    }
    let quad = median(cors);
    let linear: Vec<f64> = cell(t2, "S1-i")
        .result
        .as_ref()
        .map(|r| {
            r.reps
                .iter()
                .flat_map(|rep| &rep.outcomes)
                .filter(|o| o.method == SdrKind::Sir)
                .filter_map(|o| match o.status {
                    MethodStatus::Ok { cor_truth, .. } => Some(cor_truth),
                    MethodStatus::Failed(_) => None,
                })
                .collect()
        })
        .unwrap_or_default();
    let lin = if linear.is_empty() {
        f64::NAN
    } else {
        median(linear)
    };
    check(
        quad < 0.2 && lin > 0.9,
        format!("median |cor| quadratic (p = 20) {quad:.3} < 0.2, S1-i {lin:.3} > 0.9"),
    )
}

fn brute_gcv(source: &DMatrix<f64>, target: &DMatrix<f64>, zeta: f64) -> f64 {
    let n = source.nrows();
    let lmax = source.clone().symmetric_eigen().eigenvalues.max();
    let inv = (source + DMatrix::identity(n, n) * (zeta * lmax))
        .try_inverse()
        .unwrap();
    let s = source * inv;
    let resid = target - &s * target;
    let tr = (DMatrix::identity(n, n) - s).trace();
    resid.norm_squared() / (tr * tr)
}

fn brute_argmin(grid: &[f64], scores: &[f64]) -> f64 {
    let mut best = (grid[0], scores[0]);
    for (&z, &s) in grid.iter().zip(scores).skip(1) {
        let tied = (s - best.1).abs() <= 1e-12 * s.abs().max(best.1.abs());
        if s < best.1 && !tied || tied && z > best.0 {
            best = (z, s);
        }
    }
    best.0
}

fn criterion_11() -> Check {
    let grid = default_gcv_grid(30);
    let mut matches = 0;
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(1100 + seed);
        let x = normal(&mut rng, 4, 3);
        let y = normal(&mut rng, 4, 1);
        let gx = gram(
            &RadialKernel::gaussian(rng.random_range(0.5..4.0)).unwrap(),
            &x,
        )
        .unwrap();
        let gy = gram(
            &RadialKernel::gaussian(rng.random_range(0.5..4.0)).unwrap(),
            &y,
        )
        .unwrap();
        let sel = gcv_select(&gx, &gy, &grid).unwrap();
        let bx: Vec<f64> = grid
            .iter()
            .map(|&z| brute_gcv(&gx.values, &gy.values, z))
            .collect();
        let by: Vec<f64> = grid
            .iter()
            .map(|&z| brute_gcv(&gy.values, &gx.values, z))
            .collect();
        if sel.zeta_x == brute_argmin(&grid, &bx) && sel.zeta_y == brute_argmin(&grid, &by) {
            matches += 1;
        }
    }
    check(
        matches == 5,
        format!("{matches} of 5 Gram pairs select the same (zeta_x, zeta_y)"),
    )
}

fn criterion_12() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (run, threads) in [(0, "1"), (1, "1"), (2, "4"), (3, "4")] {
        let out = dir.path().join(format!("run{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_schoensdr"))
            .args([
                "reproduce",
                "--table",
                "2",
                "--reps",
                "5",
                "--seed",
                "7",
                "--threads",
                threads,
                "--out",
            ])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return check(false, format!("run {run} exited with {}", status.status));
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    check(
        identical,
        format!(
            "{} CSV files per run, identical across 2 runs at 1 thread and 2 at 4 threads",
            outputs[0].len()
        ),
    )
}

fn main() {
    let started = std::time::Instant::now();
    let mut t2_configs = table_configs(2, REPS, SEED).unwrap();
    let t2 = run_cells(std::mem::take(&mut t2_configs));
    let t3_configs: Vec<_> = table_configs(3, REPS, SEED)
        .unwrap()
        .into_iter()
        .filter(|c| c.cell_label() == "S1-iii")
        .collect();
    let t3 = run_cells(t3_configs);

    let results = [
        ("Table 2 S1-i SIR", criterion_1(&t2)),
        ("Table 2 S1-i kernel methods", criterion_2(&t2)),
        ("Table 2 S2-iii ordering", criterion_3(&t2)),
        ("GCV improves GSIR on S1-iii", criterion_4(&t2, &t3)),
        ("Similarity in cells (i) and (ii)", criterion_5(&t2)),
        ("PSD suite", criterion_6()),
        ("Schoenberg fixtures", criterion_7()),
        ("Closed forms", criterion_8()),
        ("Complete monotonicity", criterion_9()),
        ("SIR misses symmetric dependence", criterion_10(&t2)),
        ("GCV oracle", criterion_11()),
        ("Determinism", criterion_12()),
    ];
    let mut failed = 0;
    for (i, (name, c)) in results.iter().enumerate() {
        println!(
            "{} criterion {:>2} {name}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            i + 1,
            c.detail
        );
        if !c.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed ({REPS} replications, seed {SEED}, {:.0} s)",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
