//! End-to-end acceptance run: prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ncd_core::arrangement::{check_ncd, Arrangement, NcdBudget, Point};
use ncd_core::construct::{build, ConstructionInput, ExpectedProfile, Variant};
use ncd_core::geom::{ellipsoid, embed, hyperbola_region, HyperbolaVariant, Metadata, Orientation, PrimitiveKind};
use ncd_core::lift::{lift, min_m, LiftedManifold};
use ncd_core::plot::{render_svg, PlotConfig};
use ncd_core::poly::{int, rat, Polynomial, Rational};
use ncd_core::report::{Report, Verdict};
use ncd_core::verify::{detect_singular_values, run_suite, verify_slices, Evidence, SliceBudget, VerifyConfig};

const SEED: u64 = 42;

struct Instance {
    variant: Variant,
    labels: Vec<u8>,
}

impl Instance {
    fn name(&self) -> String {
        format!("{} {:?}", self.variant, self.labels)
    }

    fn input(&self) -> ConstructionInput {
        let t = (0..=self.labels.len() as i64).map(int).collect();
        ConstructionInput::new(t, self.labels.clone(), self.variant).unwrap()
    }
}

fn matrix() -> Vec<Instance> {
    let mut out = Vec::new();
    for l in 2..=6usize {
        for mask in 0..(1u32 << (l - 1)) {
            let labels: Vec<u8> = (0..l - 1).map(|i| (mask >> i & 1) as u8).collect();
            for variant in [Variant::Mt2, Variant::Mt3] {
                if variant == Variant::Mt3 && l == 3 {
                    continue;
                }
                out.push(Instance {
                    variant,
                    labels: labels.clone(),
                });
            }
        }
    }
    out
}

/// Everything one pass over an instance produces.
struct Run {
    built: Result<Arrangement, String>,
    ncd: Option<Report>,
    ncd_time: Duration,
    suite: Option<Report>,
    nonsingular_ms: u64,
    bytes: Vec<u8>,
}

fn run_instance(inst: &Instance) -> Run {
    let built = build(&inst.input()).map_err(|e| e.to_string());
    let mut run = Run {
        built: built.clone(),
        ncd: None,
        ncd_time: Duration::ZERO,
        suite: None,
        nonsingular_ms: 0,
        bytes: Vec::new(),
    };
    let Ok(a) = built else { return run };
    let start = Instant::now();
    let ncd = check_ncd(&a, &NcdBudget::default(), SEED);
    run.ncd_time = start.elapsed();
    let lm = lift(&a, min_m(&a)).unwrap();
    let cfg = VerifyConfig {
        run_ncd: false,
        timings: true,
        ..VerifyConfig::default()
    };
    let mut suite = run_suite(&lm, &cfg, SEED);
    run.nonsingular_ms = suite
        .check("verify.nonsingular")
        .and_then(|c| c.wall_time_ms)
        .unwrap_or(u64::MAX);
    // compare the reports as written without timings
    for c in &mut suite.checks {
        c.wall_time_ms = None;
    }
    run.bytes.extend(ncd.to_json().bytes());
    run.bytes.extend(suite.to_json().bytes());
    run.bytes
        .extend(render_svg(&a, &PlotConfig::default()).unwrap().bytes());
    run.ncd = Some(ncd);
    run.suite = Some(suite);
    run
}

struct Line {
    ok: bool,
    text: String,
}

fn line(ok: bool, text: String) -> Line {
    Line { ok, text }
}

fn first_failure(r: &Report) -> String {
    r.checks
        .iter()
        .find(|c| !c.passed())
        .map(|c| {
            let w = c.counterexamples.first().map(|w| w.what.clone()).unwrap_or_default();
            format!("{} {:?} {w}", c.id, c.verdict)
        })
        .unwrap_or_default()
}

fn criterion_1(insts: &[Instance], runs: &[Run]) -> Line {
    let mut bad = Vec::new();
    let mut total = Duration::ZERO;
    let mut worst = Duration::ZERO;
    for (i, r) in insts.iter().zip(runs) {
        total += r.ncd_time;
        worst = worst.max(r.ncd_time);
        match (&r.built, &r.ncd) {
            (Err(e), _) => bad.push(format!("{}: construct failed: {e}", i.name())),
            (Ok(_), Some(n)) if !n.passed() => bad.push(format!("{}: {}", i.name(), first_failure(n))),
            _ if r.ncd_time >= Duration::from_secs(5) => {
                bad.push(format!("{}: check_ncd took {:?}", i.name(), r.ncd_time))
            }
            _ => {}
        }
    }
    if total >= Duration::from_secs(300) {
        bad.push(format!("total check_ncd time {total:?}"));
    }
    line(
        bad.is_empty(),
        format!(
            "construction matrix: {}/{} instances build and pass check_ncd; slowest {:.2}s, total {:.1}s{}",
            insts.len() - bad.len(),
            insts.len(),
            worst.as_secs_f64(),
            total.as_secs_f64(),
            detail(&bad)
        ),
    )
}

fn detail(bad: &[String]) -> String {
    match bad.first() {
        None => String::new(),
        Some(b) => format!("; first failure: {b}"),
    }
}

fn suite_criterion(
    insts: &[Instance],
    runs: &[Run],
    what: &str,
    ids: &[&str],
    extra: impl Fn(&Report, &Run) -> Option<String>,
) -> (Vec<String>, usize) {
    let mut bad = Vec::new();
    let mut samples = 0;
    for (i, r) in insts.iter().zip(runs) {
        let Some(s) = &r.suite else {
            bad.push(format!("{}: no {what} run", i.name()));
            continue;
        };
        for id in ids {
            match s.check(id) {
                Some(c) if c.passed() => samples += c.samples,
                Some(c) => {
                    let w = c
                        .counterexamples
                        .first()
                        .map(|w| w.what.clone())
                        .unwrap_or_else(|| format!("{:?}", c.details));
                    bad.push(format!("{}: {id} {:?}: {w}", i.name(), c.verdict));
                }
                None => bad.push(format!("{}: {id} missing", i.name())),
            }
        }
        if let Some(e) = extra(s, r) {
            bad.push(format!("{}: {e}", i.name()));
        }
    }
    (bad, samples)
}

fn criterion_2(insts: &[Instance], runs: &[Run]) -> Line {
    let (bad, _) = suite_criterion(insts, runs, "rank", &["verify.nonsingular"], |s, r| {
        let c = s.check("verify.nonsingular")?;
        if c.samples < 2000 {
            return Some(format!("only {} rank samples", c.samples));
        }
        (r.nonsingular_ms >= 10_000).then(|| format!("rank check took {} ms", r.nonsingular_ms))
    });
    let worst = runs.iter().map(|r| r.nonsingular_ms).max().unwrap_or(0);
    let min_samples = runs
        .iter()
        .filter_map(|r| r.suite.as_ref()?.check("verify.nonsingular").map(|c| c.samples))
        .min()
        .unwrap_or(0);
    line(
        bad.is_empty(),
        format!(
            "non-singularity: Jacobian rank l on {}/{} lifts at m = n + l, at least {min_samples} points each incl. strata and exact candidates; slowest {worst} ms{}",
            insts.len() - bad.len().min(insts.len()),
            insts.len(),
            detail(&bad)
        ),
    )
}

fn criterion_3(insts: &[Instance], runs: &[Run]) -> Line {
    let (bad, _) = suite_criterion(
        insts,
        runs,
        "image",
        &["verify.image_interval", "verify.singular_values"],
        |s, _| {
            let img = s.check("verify.image_interval")?;
            let exact = img
                .witnesses
                .iter()
                .filter(|w| w.what.contains("endpoint") && w.exact.is_some())
                .count();
            (exact != 2).then(|| format!("{exact} exact endpoint witnesses"))
        },
    );
    let flagged = runs
        .iter()
        .filter_map(|r| r.suite.as_ref())
        .flat_map(|s| &s.checks)
        .filter(|c| c.verdict == Verdict::Flagged)
        .count();
    line(
        bad.is_empty(),
        format!(
            "image and singular values: f(M) = [t_1, t_l] within 1e-12 with exact endpoints and singular values = {{t_j}} within 1e-6 on {}/{} instances ({flagged} flagged){}",
            insts.len() - bad.len().min(insts.len()),
            insts.len(),
            detail(&bad)
        ),
    )
}

fn criterion_4(insts: &[Instance], runs: &[Run]) -> Line {
    let (mut bad, queries) = suite_criterion(insts, runs, "slice", &["verify.slices"], |s, _| {
        let c = s.check("verify.slices")?;
        let n = c.details["queries"].as_array().map_or(0, Vec::len);
        (n == 0).then(|| "no slice queries".to_string())
    });
    for (i, r) in insts.iter().zip(runs) {
        let Some(c) = r.suite.as_ref().and_then(|s| s.check("verify.slices")) else {
            continue;
        };
        let n = c.details["queries"].as_array().map_or(0, Vec::len);
        if n != 5 * i.labels.len() {
            bad.push(format!(
                "{}: {n} slice queries, expected {}",
                i.name(),
                5 * i.labels.len()
            ));
        }
    }
    // negative control: a permuted labeling must be reported as a mismatch
    let mut controls = 0;
    for (i, r) in insts.iter().zip(runs) {
        let Ok(a) = &r.built else { continue };
        if i.labels.len() != 3 || i.labels.iter().all(|&b| b == i.labels[0]) {
            continue;
        }
        let mut perm = i.labels.clone();
        while perm == i.labels {
            perm.rotate_left(1);
        }
        let mut wrong = a.clone();
        wrong.expected = Some(ExpectedProfile::from_labels(&a.t_values, &perm));
        let lm = lift(&wrong, min_m(&wrong)).unwrap();
        let ev = Evidence::gather(&wrong, 500, SEED).unwrap();
        let rec = verify_slices(&lm, &ev, 5, SliceBudget::default(), SEED);
        controls += 1;
        let caught = rec.verdict == Verdict::Fail && rec.counterexamples.iter().any(|w| w.what.contains("but label"));
        if !caught {
            bad.push(format!("{}: permuted labels {perm:?} not reported", i.name()));
        }
    }
    line(
        bad.is_empty(),
        format!(
            "slice boundedness: {queries} slices (5 per interval) match the labels with analytic/empirical agreement and one component; {controls} permuted-label controls reported{}",
            detail(&bad)
        ),
    )
}

fn criterion_5() -> Line {
    let mut bad = Vec::new();
    let a = build(&ConstructionInput::new(vec![int(-1), int(1)], vec![0], Variant::Mt3).unwrap()).unwrap();
    let lm: LiftedManifold = lift(&a, 3).unwrap();
    let sphere = Polynomial::parse("x1^2 + x2^2 + x3^2 + x4^2 - 1", 4).unwrap();
    let eq = &lm.equations;
    if !(eq.len() == 1 && (eq[0] == sphere || eq[0] == -&sphere)) {
        bad.push(format!(
            "equations {:?}",
            eq.iter().map(ToString::to_string).collect::<Vec<_>>()
        ));
    }
    let names = lm.variable_names().join(", ");
    let sv = detect_singular_values(&lm, 2000, SEED).unwrap();
    let exact: Vec<Option<Rational>> = sv.values.iter().map(|h| h.exact.clone()).collect();
    if exact != vec![Some(int(-1)), Some(int(1))] {
        bad.push(format!("singular values {:?}", sv.values_f64()));
    }
    let fiber = lm.fiber_at(&Point::Exact(vec![int(0), int(0)])).unwrap();
    let circle = fiber.factors.len() == 1 && fiber.factors[0].sphere_dim == 1 && fiber.factors[0].exact == Some(int(1));
    if !circle {
        bad.push(format!("fiber {fiber:?}"));
    }
    line(
        bad.is_empty(),
        format!(
            "exact oracle: MT3 l=2 t=(-1,1) m=3 gives {} = 0 in ({names}), singular values {{-1, 1}} exact, fiber over (0,0) a circle of squared radius 1{}",
            eq.first().map(ToString::to_string).unwrap_or_default(),
            detail(&bad)
        ),
    )
}

fn criterion_6() -> Line {
    let mut bad = Vec::new();
    let mut found = Vec::new();
    let mut expect_fail = |what: &str, arr: &Arrangement, id: &str| {
        let r = check_ncd(arr, &NcdBudget::default(), SEED);
        match r.check(id) {
            Some(c) if c.verdict == Verdict::Fail && !c.counterexamples.is_empty() => {
                let w = &c.counterexamples[0];
                found.push(format!("{what}: {id} fails at {:?}", w.point));
            }
            _ => bad.push(format!("{what}: {id} did not fail")),
        }
    };
    let disc = |c: i64| ellipsoid(vec![int(c), int(0)], vec![int(1), int(1)], Orientation::Body).unwrap();
    let tangent =
        Arrangement::new_unchecked(2, vec![disc(0), disc(2)], vec![int(1), int(0)], "tangent circles").unwrap();
    expect_fail("tangent circles", &tangent, "ncd.transversality");

    let dangling = Arrangement::new(
        2,
        vec![
            hyperbola_region(HyperbolaVariant::RightOf, int(0), int(0), int(-1)).unwrap(),
            hyperbola_region(HyperbolaVariant::LeftOf, int(1), int(0), int(1)).unwrap(),
        ],
        vec![rat(1, 2), int(0)],
        "dangling branch",
    )
    .unwrap();
    expect_fail("dangling hyperbola branch", &dangling, "ncd.off_component");

    let base =
        build(&ConstructionInput::new((0..5).map(int).collect(), vec![0, 0, 0, 0], Variant::Mt2).unwrap()).unwrap();
    let mut prims = base.primitives.clone();
    let h = prims
        .iter()
        .position(|p| p.kind == PrimitiveKind::EllipsoidHole)
        .unwrap();
    let Metadata::Ellipsoid {
        centers,
        squared_semi_axes,
        ..
    } = &prims[h].metadata
    else {
        unreachable!()
    };
    let inflated = ellipsoid(
        centers.clone(),
        squared_semi_axes.iter().map(|r| r * int(16)).collect(),
        Orientation::Hole,
    )
    .unwrap();
    prims[h] = embed(&inflated, base.n, &prims[h].axes).unwrap();
    let mutated = Arrangement::new_unchecked(base.n, prims, base.seed_point.clone(), "hole inflation").unwrap();
    expect_fail("hole inflation", &mutated, "ncd.hole_separation");
    line(
        bad.is_empty(),
        format!("adversarial suite: {}{}", found.join("; "), detail(&bad)),
    )
}

fn criterion_7(insts: &[Instance], first: &[Run]) -> Line {
    let mut differ = Vec::new();
    let mut bytes = 0;
    for (i, r) in insts.iter().zip(first) {
        let again = run_instance(i);
        bytes += r.bytes.len();
        if again.bytes != r.bytes || r.bytes.is_empty() {
            differ.push(i.name());
        }
    }
    line(
        differ.is_empty(),
        format!(
            "determinism: second seed-{SEED} run of the matrix reproduces {} bytes of reports and SVGs exactly{}",
            bytes,
            detail(&differ)
        ),
    )
}

fn main() -> ExitCode {
    let insts = matrix();
    let start = Instant::now();
    let runs: Vec<Run> = insts.iter().map(run_instance).collect();
    let lines = [
        criterion_1(&insts, &runs),
        criterion_2(&insts, &runs),
        criterion_3(&insts, &runs),
        criterion_4(&insts, &runs),
        criterion_5(),
        criterion_6(),
        criterion_7(&insts, &runs),
    ];
    let mut ok = true;
    for (k, l) in lines.iter().enumerate() {
        println!("criterion {}: {} {}", k + 1, if l.ok { "PASS" } else { "FAIL" }, l.text);
        ok &= l.ok;
    }
    println!(
        "acceptance: {} instances, {:.1}s",
        insts.len(),
        start.elapsed().as_secs_f64()
    );
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
