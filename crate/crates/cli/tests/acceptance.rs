//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails if any criterion fails, except those listed in
//! `DOCUMENTED_MISSES`, which are printed as failures together with the data
//! needed to judge them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bosewalk::exec::Threaded;
use bosewalk::graph_file::load_graph;
use bosewalk::output::DETERMINISTIC;
use bosewalk::runner::{self, RunOptions};
use bosewalk_core::observables::{amplitude_weight, phase_space, ConfigDistribution};
use bosewalk_core::oracle::evolution_deviations;
use bosewalk_core::*;

const N: u32 = 12;
const M: usize = 10;
const LONG_RUN: u64 = 400;
const TABLE_RUN: u64 = 120;

/// Integer targets quoted in the published effective-dimension results.
struct Published;
impl Published {
    const CYCLE_AT_30: u64 = 7900;
    const CYCLE_AT_50: u64 = 68632;
    const TERMINAL: [u64; 2] = [146860, 147070];
    const CYCLE_REGIME: u64 = 94;
    const HEXAGON_AT_30: u64 = 14507;
    const HEXAGON_AT_50: u64 = 115052;
    const HEXAGON_REGIME: u64 = 70;
    const PETERSEN_REGIME: u64 = 48;
}

const DOCUMENTED_MISSES: [&str; 1] = ["published integer targets"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn graph(name: GraphName) -> GraphSpec {
    GraphSpec::build_named(name, M).unwrap()
}

/// Half the particles on vertex 3 and half on vertex 5 (one-based), with
/// amplitudes `-i` and `1` on the given zero-based chiralities.
fn published_initial(space: &ConfigSpace, d: usize, chiralities: (usize, usize)) -> AmplitudeTable {
    let mut a = vec![0; M];
    a[2] = N;
    let mut b = vec![0; M];
    b[4] = N;
    AmplitudeTable::from_configurations(
        space,
        d,
        [
            (chiralities.0, Configuration::from(a), Complex64::new(0.0, -1.0)),
            (chiralities.1, Configuration::from(b), Complex64::new(1.0, 0.0)),
        ],
    )
    .unwrap()
}

fn start_walk(g: &GraphSpec, settings: WalkSettings, chiralities: (usize, usize)) -> Walk {
    let coin = CoinMatrix::new(g.coin_order()).unwrap();
    let kernel = ShiftKernel::new(g, &coin, N, settings.double_coin_factor).unwrap();
    let init = published_initial(kernel.space(), g.coin_order(), chiralities);
    Walk::new(kernel, settings, init).unwrap()
}

fn dimension_series(g: &GraphSpec, settings: WalkSettings, chiralities: (usize, usize), steps: u64) -> Vec<u64> {
    let mut walk = start_walk(g, settings, chiralities);
    let reports = walk.run(steps, &Threaded::available(), &mut (), |_, _| Ok::<(), String>(())).unwrap();
    reports.iter().map(|r| r.effective_dimension).collect()
}

/// `binomial(M + N - 1, N)` from Pascal's triangle.
fn pascal_dimension(n: u32, m: usize) -> u128 {
    let top = m + n as usize - 1;
    let mut row = vec![1u128];
    for _ in 0..top {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row[n as usize]
}

fn dimension_formula() -> Outcome {
    let got = space_dimension(N, M).unwrap();
    let oracle = pascal_dimension(N, M);
    Outcome {
        name: "dimension formula",
        pass: got == 293_930 && got == oracle,
        detail: format!("D(12,10) = {got}, Pascal oracle {oracle}"),
    }
}

struct LongRuns {
    dims: BTreeMap<&'static str, Vec<u64>>,
    outcome: Outcome,
    g2_outcome: Outcome,
}

/// 400 steps on each graph, checking the norm and the particle number after
/// every step. The cyclic run also feeds the `g2` identity checks.
fn long_runs() -> LongRuns {
    let mut dims = BTreeMap::new();
    let mut worst_norm = 0.0f64;
    let mut conserved = true;
    let mut timings = String::new();
    let mut g2_worst = 0.0f64;
    let mut g2_checked = 0;
    let sampled: Vec<u64> = (1..=20).map(|i| i * LONG_RUN / 20).collect();
    for name in GraphName::ALL {
        let g = graph(name);
        let started = Instant::now();
        let mut walk = start_walk(&g, WalkSettings::default(), (0, 1));
        let space = walk.kernel().space().clone();
        let reports = walk
            .run(LONG_RUN, &Threaded::available(), &mut (), |report, state| {
                worst_norm = worst_norm.max((state.norm_sqr() - 1.0).abs());
                conserved &= state.check_conservation(&space).is_ok();
                if name == GraphName::Cycle && sampled.contains(&report.step) {
                    g2_worst = g2_worst.max(g2_identity_deviation(state, &space));
                    g2_checked += 1;
                }
                Ok::<(), String>(())
            })
            .unwrap();
        write!(timings, "{} {:.1}s; ", name.as_str(), started.elapsed().as_secs_f64()).unwrap();
        dims.insert(name.as_str(), reports.iter().map(|r| r.effective_dimension).collect());
    }
    LongRuns {
        dims,
        outcome: Outcome {
            name: "norm and conservation",
            pass: worst_norm <= 1e-12 && conserved,
            detail: format!(
                "400 steps x 3 graphs: max |sum|C|^2 - 1| = {worst_norm:.1e}, particle sum 12 everywhere: {conserved}; {timings}"
            ),
        },
        g2_outcome: Outcome {
            name: "g2 symmetry and moment consistency",
            pass: g2_worst <= 1e-12 && g2_checked == 20,
            detail: format!("{g2_checked} sampled steps of the cyclic run, max relative deviation {g2_worst:.1e}"),
        },
    }
}

/// Largest relative deviation from `g2(a,b) = g2(b,a)` and
/// `g2(a,a) = (<n^2> - <n>) / <n>^2`.
fn g2_identity_deviation(state: &AmplitudeTable, space: &ConfigSpace) -> f64 {
    let dist = ConfigDistribution::new(state, space).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let mut worst = 0.0f64;
    let matrix = dist.g2_matrix();
    for a in 0..M {
        for b in 0..M {
            match (matrix[a * M + b], matrix[b * M + a]) {
                (Some(x), Some(y)) => worst = worst.max(rel(x, y)),
                (None, None) => {}
                _ => return f64::INFINITY,
            }
        }
        let first = dist.moment(a, 1).unwrap();
        let second = dist.moment(a, 2).unwrap();
        if let Some(g) = dist.g2(a, a).unwrap() {
            worst = worst.max(rel(g, (second - first) / (first * first)));
        }
    }
    worst
}

fn oracle_equivalence() -> Outcome {
    let single = |m: usize, chirality: usize, vertex: usize, space: &ConfigSpace, d: usize| {
        let mut occ = vec![0; m];
        occ[vertex] = 1;
        AmplitudeTable::from_configurations(space, d, [(chirality, Configuration::from(occ), Complex64::new(1.0, 0.0))])
            .unwrap()
    };
    let cycle4 = GraphSpec::build_named(GraphName::Cycle, 4).unwrap();
    let s24 = ConfigSpace::new(2, 4).unwrap();
    let pair = AmplitudeTable::from_configurations(
        &s24,
        2,
        [
            (0, Configuration::from(vec![0, 2, 0, 0]), Complex64::new(0.0, -1.0)),
            (1, Configuration::from(vec![0, 0, 0, 2]), Complex64::new(1.0, 0.0)),
        ],
    )
    .unwrap();
    let cycle3 = GraphSpec::build_named(GraphName::Cycle, 3).unwrap();
    let s13 = ConfigSpace::new(1, 3).unwrap();
    let petersen = graph(GraphName::PetersenCirculant);
    let s110 = ConfigSpace::new(1, 10).unwrap();
    let cases = [
        ("cycle N=2 M=4", cycle4, pair),
        ("cycle N=1 M=3", cycle3, single(3, 0, 0, &s13, 2)),
        ("petersen N=1 M=10", petersen, single(10, 2, 2, &s110, 4)),
    ];
    let mut detail = String::new();
    let mut pass = true;
    for (label, g, init) in cases {
        let coin = CoinMatrix::new(g.coin_order()).unwrap();
        let devs = evolution_deviations(&g, &coin, &init, 20, WalkSettings::default()).unwrap();
        let worst = devs.iter().copied().fold(0.0, f64::max);
        pass &= worst <= 1e-10;
        write!(detail, "{label}: {worst:.1e}; ").unwrap();
    }
    Outcome { name: "oracle equivalence", pass, detail: format!("20 steps, max sup-norm deviation {detail}") }
}

fn regime(series: &[u64], scale: u64) -> (Option<u64>, Vec<u64>) {
    let points: Vec<(u64, u64)> = series.iter().enumerate().map(|(s, &d)| (s as u64, d)).collect();
    let change = detect_regime_change(&points).unwrap();
    (change.step.map(|s| s * scale), change.terminal)
}

/// Dimensions at published steps 30 and 50, the terminal set and the regime step.
#[derive(Clone, Debug, PartialEq)]
struct Row {
    at_30: u64,
    at_50: u64,
    terminal: Vec<u64>,
    regime: Option<u64>,
}

/// Reads a dimension series where one walk step counts as `scale` published steps.
fn row(series: &[u64], scale: u64) -> Row {
    let (regime, terminal) = regime(series, scale);
    Row { at_30: series[(30 / scale) as usize], at_50: series[(50 / scale) as usize], terminal, regime }
}

fn fmt_opt(v: Option<u64>) -> String {
    v.map_or("-".into(), |v| v.to_string())
}

fn cell(got: u64, want: u64) -> String {
    if got == want {
        format!("{got}*")
    } else {
        got.to_string()
    }
}

fn terminal_cell(got: &[u64]) -> String {
    let s = got.iter().map(u64::to_string).collect::<Vec<_>>().join("/");
    if got == Published::TERMINAL {
        s + "*"
    } else {
        s
    }
}

fn regime_cell(got: Option<u64>, want: u64) -> String {
    if got == Some(want) {
        format!("{want}*")
    } else {
        fmt_opt(got)
    }
}

fn targets_met(cycle: &Row, hexagon: &Row, petersen: &Row) -> Vec<(&'static str, bool)> {
    vec![
        ("cycle r=30", cycle.at_30 == Published::CYCLE_AT_30),
        ("cycle r=50", cycle.at_50 == Published::CYCLE_AT_50),
        ("cycle terminal set", cycle.terminal == Published::TERMINAL),
        ("cycle r*", cycle.regime == Some(Published::CYCLE_REGIME)),
        ("double hexagon r=30", hexagon.at_30 == Published::HEXAGON_AT_30),
        ("double hexagon r=50", hexagon.at_50 == Published::HEXAGON_AT_50),
        ("double hexagon r*", hexagon.regime == Some(Published::HEXAGON_REGIME)),
        ("petersen r*", petersen.regime == Some(Published::PETERSEN_REGIME)),
    ]
}

fn table_line(label: &str, cycle: &Row, hexagon: &Row, petersen: &Row) -> String {
    format!(
        "    {label:<44} | {:>7} {:>7} {:>15} {:>4} | {:>7} {:>7} {:>4} | {:>4} | {}",
        cell(cycle.at_30, Published::CYCLE_AT_30),
        cell(cycle.at_50, Published::CYCLE_AT_50),
        terminal_cell(&cycle.terminal),
        regime_cell(cycle.regime, Published::CYCLE_REGIME),
        cell(hexagon.at_30, Published::HEXAGON_AT_30),
        cell(hexagon.at_50, Published::HEXAGON_AT_50),
        regime_cell(hexagon.regime, Published::HEXAGON_REGIME),
        regime_cell(petersen.regime, Published::PETERSEN_REGIME),
        targets_met(cycle, hexagon, petersen).iter().filter(|(_, ok)| *ok).count(),
    )
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Published targets under the default toggles, plus the sensitivity table.
fn published_targets(dims: &BTreeMap<&'static str, Vec<u64>>) -> Outcome {
    let cycle = row(&dims["cycle"], 1);
    let hexagon = row(&dims["double_hexagon"], 1);
    let petersen = row(&dims["petersen_circulant"], 1);
    let met = targets_met(&cycle, &hexagon, &petersen);
    let mut detail = String::new();
    for (label, ok) in &met {
        write!(detail, "{label} {}; ", if *ok { "ok" } else { "miss" }).unwrap();
    }
    writeln!(detail).unwrap();
    writeln!(
        detail,
        "    sensitivity table (* = matches the published value; last column counts matched targets out of 8)\n    {:<44} | {:>7} {:>7} {:>15} {:>4} | {:>7} {:>7} {:>4} | {:>4} |",
        "variant", "cyc@30", "cyc@50", "cyc terminal", "r*", "dh@30", "dh@50", "r*", "pet r*"
    )
    .unwrap();
    detail += &table_line("defaults", &cycle, &hexagon, &petersen);

    let variant = |settings: WalkSettings, chiralities: (usize, usize), scale: u64, hex: &GraphSpec| {
        let steps = TABLE_RUN;
        let c = row(&dimension_series(&graph(GraphName::Cycle), settings, chiralities, steps), scale);
        let h = row(&dimension_series(hex, settings, chiralities, steps), scale);
        let p = row(&dimension_series(&graph(GraphName::PetersenCirculant), settings, chiralities, steps), scale);
        (c, h, p)
    };
    let defaults = WalkSettings::default();
    let dh1 = graph(GraphName::DoubleHexagon);
    let rows: Vec<(&str, WalkSettings, (usize, usize), u64, &GraphSpec)> = vec![
        ("double coin factor", WalkSettings { double_coin_factor: true, ..defaults }, (0, 1), 1, &dh1),
        ("drop threshold 0", WalkSettings { drop_threshold: 0.0, ..defaults }, (0, 1), 1, &dh1),
        ("dimension tolerance 1e-12", WalkSettings { dimension_tolerance: 1e-12, ..defaults }, (0, 1), 1, &dh1),
        ("chiralities swapped", defaults, (1, 0), 1, &dh1),
        ("chiralities swapped, r = 2 x step", defaults, (1, 0), 2, &dh1),
    ];
    for (label, settings, chiralities, scale, hex) in rows {
        let (c, h, p) = variant(settings, chiralities, scale, hex);
        detail += "\n";
        detail += &table_line(label, &c, &h, &p);
    }
    match load_graph(&configs_dir().join("double-hexagon-relabelled.json")) {
        Ok(relabelled) => {
            for (label, chiralities) in [("as written", (0, 1)), ("swapped", (1, 0))] {
                let h = row(&dimension_series(&relabelled, defaults, chiralities, TABLE_RUN), 2);
                write!(
                    detail,
                    "\n    double hexagon with labels 3 and 7 exchanged (graph file), chiralities {label}, r = 2 x step: \
                     dh@30 {} dh@50 {} r* {}",
                    cell(h.at_30, Published::HEXAGON_AT_30),
                    cell(h.at_50, Published::HEXAGON_AT_50),
                    regime_cell(h.regime, Published::HEXAGON_REGIME),
                )
                .unwrap();
            }
        }
        Err(e) => write!(detail, "\n    relabelled double hexagon unavailable: {e}").unwrap(),
    }
    detail += "\n    counting mode (restricted/envelope) does not enter the effective dimension; it has no column";
    Outcome { name: "published integer targets", pass: met.iter().all(|(_, ok)| *ok), detail }
}

fn step_zero_observables() -> Outcome {
    let g = graph(GraphName::Cycle);
    let walk = start_walk(&g, WalkSettings::default(), (0, 1));
    let space = walk.kernel().space();
    let state = walk.state();
    let dist = ConfigDistribution::new(state, space).unwrap();
    let mut occ = vec![0; M];
    occ[2] = N;
    let r3 = space.rank(&Configuration::from(occ)).unwrap();
    let mut occ = vec![0; M];
    occ[4] = N;
    let r5 = space.rank(&Configuration::from(occ)).unwrap();
    let p3 = dist.probability(r3);
    let p5 = dist.probability(r5);
    let n3 = dist.moment(2, 1).unwrap();
    let n5 = dist.moment(4, 1).unwrap();
    let q3 = dist.occupancy_histogram(2).unwrap()[N as usize];
    let q5 = dist.occupancy_histogram(4).unwrap()[N as usize];
    let dim = state.effective_dimension(WalkSettings::default().dimension_tolerance).unwrap();
    let errors = [(p3, 0.5), (p5, 0.5), (n3, 6.0), (n5, 6.0), (q3, 0.5), (q5, 0.5)];
    let worst = errors.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Outcome {
        name: "step-0 observables",
        pass: worst <= 1e-15 && dim == 2,
        detail: format!("P = {p3}, {p5}; <n3> = {n3}, <n5> = {n5}; Q12 = {q3}, {q5}; dimension {dim}; max error {worst:.1e}"),
    }
}

fn coin_unitarity() -> (bool, String) {
    let worst = (1..=8).map(|d| CoinMatrix::new(d).unwrap().unitarity_deviation()).fold(0.0, f64::max);
    (worst <= 1e-12, format!("coin d=1..8 max deviation {worst:.1e}"))
}

fn rank_bijection() -> (bool, String) {
    let mut spaces = 0;
    let mut total = 0u64;
    for m in 1..=64usize {
        for n in 0..=64u32 {
            let Ok(d) = space_dimension(n, m) else { continue };
            if d > 100_000 {
                break;
            }
            let space = ConfigSpace::new(n, m).unwrap();
            for r in 0..space.dimension() {
                let c = space.unrank(r).unwrap();
                if c.particles() != u64::from(n) || space.rank(&c).unwrap() != r {
                    return (false, format!("rank/unrank broken at N={n} M={m} rank {r}"));
                }
            }
            spaces += 1;
            total += space.dimension();
        }
    }
    (true, format!("rank/unrank bijective on {spaces} spaces ({total} configurations)"))
}

fn phase_space_enumeration() -> (bool, String) {
    fn compositions(n: u32, parts: u32) -> Vec<Vec<u32>> {
        if parts == 0 {
            return if n == 0 { vec![vec![]] } else { vec![] };
        }
        let mut out = Vec::new();
        for first in 0..=n {
            for mut rest in compositions(n - first, parts - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }
    let mut worst = 0.0f64;
    for n in 1..=3u32 {
        for m in 1..=3usize {
            let space = ConfigSpace::new(n, m).unwrap();
            let entries = (0..space.dimension())
                .map(|r| (Key::new((r % 2) as u32, r), Complex64::new(0.3 + r as f64, -0.7 * r as f64)));
            let t = AmplitudeTable::from_entries(&space, 2, entries).unwrap().normalized().unwrap().1;
            for eta in 1..=n as usize {
                let phase = 2.0 * PI * eta as f64 / f64::from(n);
                let (mut x, mut p, mut e) = (0.0, 0.0, 0.0);
                for (rank, prob) in t.config_weights() {
                    let occ = space.unrank(rank).unwrap();
                    for (a, &k) in occ.occupations().iter().enumerate() {
                        let site = (a + 1) as f64;
                        for comp in compositions(k, n) {
                            let w = prob * amplitude_weight(k);
                            x += w * (phase * site).cos();
                            p += w * (phase * site).sin();
                            e += w * (f64::from(comp[eta - 1]) + 0.5 - (2.0 * phase * site).cos());
                        }
                    }
                }
                let point = phase_space(&t, &space, eta).unwrap();
                for (a, b) in [(point.x, x), (point.p, p), (point.energy, e)] {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    (worst <= 1e-12, format!("phase space vs enumeration (N,M <= 3) max deviation {worst:.1e}"))
}

fn thread_determinism() -> (bool, String) {
    let g = graph(GraphName::Cycle);
    let run = |threads: usize| {
        let mut walk = start_walk(&g, WalkSettings::default(), (0, 1));
        let reports = walk.run(30, &Threaded::new(threads), &mut (), |_, _| Ok::<(), String>(())).unwrap();
        let reports: Vec<StepReport> = reports.into_iter().map(StepReport::untimed).collect();
        let bits: Vec<(Key, u64, u64)> =
            walk.state().entries().iter().map(|(k, z)| (*k, z.re.to_bits(), z.im.to_bits())).collect();
        (reports, bits)
    };
    let one = run(1);
    let same = [2, 3, 8].iter().all(|&t| run(t) == one);
    (same, format!("30 cyclic steps bit-identical for 1, 2, 3 and 8 threads: {same}"))
}

fn snapshot_resume() -> (bool, String) {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs_dir().join("cyclic.toml");
    let full = tmp.path().join("full");
    let split = tmp.path().join("split");
    let options = |steps: u64, out: &Path| RunOptions {
        steps: Some(steps),
        out: Some(out.to_owned()),
        snapshot_every: Some(10),
        ..RunOptions::default()
    };
    runner::run(&config, &options(30, &full)).unwrap();
    runner::run(&config, &options(15, &split)).unwrap();
    runner::resume(&split.join("snapshots/step-000010.bin"), &config, &options(30, &split)).unwrap();
    let mut same = true;
    for name in DETERMINISTIC.iter().copied().chain(["snapshots/step-000030.bin"]) {
        same &= std::fs::read(full.join(name)).unwrap() == std::fs::read(split.join(name)).unwrap();
    }
    (same, format!("30-step cyclic run vs 15 + resume from step 10: outputs identical: {same}"))
}

fn property_suites(g2: &Outcome) -> Outcome {
    let checks = [
        coin_unitarity(),
        rank_bijection(),
        (g2.pass, g2.detail.clone()),
        phase_space_enumeration(),
        thread_determinism(),
        snapshot_resume(),
    ];
    Outcome {
        name: "property suites",
        pass: checks.iter().all(|(ok, _)| *ok),
        detail: checks.iter().map(|(ok, d)| format!("{} {d}", if *ok { "ok" } else { "FAILED" })).collect::<Vec<_>>().join("; "),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let long = long_runs();
    let outcomes = [
        dimension_formula(),
        long.outcome,
        oracle_equivalence(),
        published_targets(&long.dims),
        step_zero_observables(),
        property_suites(&long.g2_outcome),
    ];
    let mut unexpected = 0;
    for o in &outcomes {
        let documented = DOCUMENTED_MISSES.contains(&o.name);
        let status = match (o.pass, documented) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("{status}: {} -- {}", o.name, o.detail);
    }
    println!("acceptance finished in {:.0}s", started.elapsed().as_secs_f64());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
