//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. The 100-seed matrix is computed once and shared by
//! the directional, pairing and monotonicity checks.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use egress_sim::audit::audit_log;
use egress_sim::behavior::{
    detector_gate, kill_probability, no_detector_gate, BehaviorParams, Gate,
};
use egress_sim::engine::{format_events, run, SimConfig, WorldState};
use egress_sim::experiment::{
    derive_seeds, paired_configs, run_matrix, ExperimentReport, MatrixSpec,
};
use egress_sim::maps;
use egress_sim::report::{summarize_direction, ResultsFile};
use egress_sim::{layout_stats, shortest_path, Cell, FloorLayout};
use rand::Rng;

const SEEDS_PER_CELL: usize = 100;
const REFERENCE_TABLES: &str = include_str!("fixtures/reference_tables.csv");

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn bundled() -> Vec<Arc<FloorLayout>> {
    ["structure1", "gyte_floor1", "sulb_floor3"]
        .map(|n| Arc::new(maps::bundled(n).unwrap()))
        .into()
}

fn directional(report: &ExperimentReport) -> Verdict {
    let bad: Vec<String> = report
        .cells
        .iter()
        .filter(|c| !(c.evacuation_efficiency_change > 0.0 && c.casualty_change < 0.0))
        .map(|c| format!("{}/{}/{}", c.layout, c.student_count, c.runtime))
        .collect();
    let min_evac = report
        .cells
        .iter()
        .map(|c| c.evacuation_efficiency_change)
        .fold(f64::INFINITY, f64::min);
    let max_cas = report
        .cells
        .iter()
        .map(|c| c.casualty_change)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        report.cells.len() == 48 && bad.is_empty(),
        format!(
            "{} cells, {} with the wrong sign {:?}; smallest evacuation gain {:+.2} pp, smallest casualty drop {:+.2} pp",
            report.cells.len(),
            bad.len(),
            bad,
            min_evac,
            max_cas
        ),
    )
}

fn reference_arithmetic() -> Verdict {
    let rows = ResultsFile::parse(REFERENCE_TABLES).unwrap().rows;
    let summary = summarize_direction(&rows);
    let expected = [
        ("structure1", 51.62, -10.09),
        ("gyte_floor1", 43.91, -6.99),
        ("sulb_floor3", 49.31, -8.59),
    ];
    let mut pass = rows.len() == 48 && summary.per_layout.len() == 3;
    let mut parts = Vec::new();
    for ((name, evac, cas), got) in expected.iter().zip(&summary.per_layout) {
        let ok = got.layout == *name
            && (got.mean_evacuation_change - evac).abs() <= 0.15
            && (got.mean_casualty_change - cas).abs() <= 0.15;
        pass &= ok;
        parts.push(format!(
            "{name} evac {:+.3} (want {evac:+.2}) cas {:+.3} (want {cas:+.2})",
            got.mean_evacuation_change, got.mean_casualty_change
        ));
    }
    verdict(pass, parts.join("; "))
}

fn equation_oracles() -> Verdict {
    let mut checked = 0;
    let mut mismatches = 0;
    for (alpha, beta) in [(5u32, 20u32), (5, 15), (3, 8)] {
        let p = BehaviorParams {
            alpha: f64::from(alpha),
            beta: f64::from(beta),
            ..Default::default()
        };
        for fk in 0..=beta + 5 {
            for sh in 0..=beta + 5 {
                let h = u32::from(fk <= alpha);
                let r = u32::from(sh >= alpha) * u32::from(sh <= beta);
                let want = if h == 1 {
                    Gate::Hide
                } else if r == 1 {
                    Gate::Run
                } else {
                    Gate::NoEffect
                };
                checked += 1;
                mismatches +=
                    usize::from(no_detector_gate(f64::from(fk), f64::from(sh), &p) != want);
            }
            let want = if fk <= alpha { Gate::Hide } else { Gate::Run };
            checked += 1;
            mismatches += usize::from(detector_gate(f64::from(fk), &p) != want);
        }
    }
    let mut rng = common::rng(2718);
    let mut kp_bad = 0;
    for _ in 0..1000 {
        let gamma: u32 = rng.random_range(1..=100);
        let d: u32 = rng.random_range(0..=2 * gamma);
        let got = kill_probability(f64::from(d), f64::from(gamma));
        let ok = if d >= gamma {
            got == 0.0
        } else {
            got == 1.0 - f64::from(d) / f64::from(gamma)
                && (got * f64::from(gamma) - f64::from(gamma - d)).abs() < 1e-12
        };
        kp_bad += usize::from(!ok);
    }
    verdict(
        mismatches == 0 && kp_bad == 0,
        format!("{checked} gate cases, {mismatches} mismatches; 1000 kill-probability pairs, {kp_bad} mismatches"),
    )
}

fn random_config(rng: &mut rand_chacha::ChaCha8Rng, layouts: &[Arc<FloorLayout>]) -> SimConfig {
    let mut c = SimConfig::new(
        Arc::clone(&layouts[rng.random_range(0..layouts.len())]),
        rng.random_range(1..=200),
    );
    c.runtime = rng.random_range(0..=540);
    c.detector_enabled = rng.random_bool(0.5);
    c.seed = rng.random();
    c.placement_seed = rng.random();
    c
}

/// Replays 1000 random configurations twice, auditing every log on the way.
fn determinism_and_audit(
    layouts: &[Arc<FloorLayout>],
    spec: &MatrixSpec,
    report: &ExperimentReport,
) -> (Verdict, Verdict) {
    let mut rng = common::rng(4242);
    let mut differing = 0;
    let mut audited = 0;
    let mut violations = Vec::new();
    let mut audit = |c: &SimConfig, r: &egress_sim::engine::RunResult| {
        audited += 1;
        if let Err(v) = audit_log(c, &r.events, Some(&r.outcome)) {
            violations.push(v.to_string());
        }
    };
    for _ in 0..1000 {
        let c = random_config(&mut rng, layouts);
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        if format_events(&a.events) != format_events(&b.events) || a.outcome != b.outcome {
            differing += 1;
        }
        audit(&c, &a);
    }
    // full-length logs from the matrix's own seeds
    for (l, layout) in layouts.iter().enumerate() {
        for &n in &spec.student_counts {
            for s in 0..10 {
                let pair = derive_seeds(spec.base_seed, l, n, s);
                let (off, on) = paired_configs(layout, n, 540, pair, &spec.settings);
                for c in [off, on] {
                    audit(&c, &run(&c).unwrap());
                }
            }
        }
    }

    let rerun = run_matrix(spec, None).unwrap();
    let same_report = ResultsFile::from_report(report).to_csv_string()
        == ResultsFile::from_report(&rerun).to_csv_string();
    (
        verdict(
            differing == 0 && same_report,
            format!(
                "1000 configs replayed, {differing} differing logs; matrix rerun byte-identical: {same_report}"
            ),
        ),
        verdict(
            violations.is_empty(),
            format!(
                "{audited} logs audited, {} violations{}",
                violations.len(),
                violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
            ),
        ),
    )
}

fn pairing(layouts: &[Arc<FloorLayout>], spec: &MatrixSpec) -> Verdict {
    let mut checked = 0;
    let mut unequal = 0;
    for (l, layout) in layouts.iter().enumerate() {
        for &n in &spec.student_counts {
            for &runtime in &spec.runtimes {
                for s in 0..spec.seeds_per_cell {
                    let pair = derive_seeds(spec.base_seed, l, n, s);
                    let (off, on) = paired_configs(layout, n, runtime, pair, &spec.settings);
                    checked += 1;
                    if WorldState::new(&off).unwrap() != WorldState::new(&on).unwrap() {
                        unequal += 1;
                    }
                }
            }
        }
    }
    verdict(
        unequal == 0,
        format!("{checked} paired starts compared, {unequal} differ"),
    )
}

fn pathfinding_oracle() -> Verdict {
    let mut rng = common::rng(1207);
    let mut checked = 0;
    let mut wrong = 0;
    for _ in 0..500 {
        let (layout, g) = common::random_map(&mut rng, 12);
        let open = common::open_cells(&g);
        for _ in 0..20 {
            let a = open[rng.random_range(0..open.len())];
            let b = open[rng.random_range(0..open.len())];
            let want = common::bfs(&g, b)[a.1][a.0];
            let got = shortest_path(
                &layout,
                Cell::new(a.0 as i32, a.1 as i32),
                Cell::new(b.0 as i32, b.1 as i32),
            )
            .ok()
            .map(|p| p.cost());
            checked += 1;
            wrong += usize::from(got != want);
        }
    }
    verdict(
        wrong == 0,
        format!("500 maps, {checked} pairs, {wrong} disagreements"),
    )
}

fn parser_golden(layouts: &[Arc<FloorLayout>]) -> Verdict {
    let expected = [(23, 4), (30, 5), (27, 3)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (layout, want) in layouts.iter().zip(expected) {
        let stats = layout_stats(layout);
        let text = layout.to_map_string();
        let again = FloorLayout::parse(&text).unwrap();
        let round_trip = again == **layout && again.to_map_string() == text;
        let ok = (stats.room_count, stats.exit_count) == want && round_trip;
        pass &= ok;
        parts.push(format!(
            "{} ({}, {}) round-trip {}",
            layout.name(),
            stats.room_count,
            stats.exit_count,
            round_trip
        ));
    }
    verdict(pass, parts.join("; "))
}

fn monotonicity(report: &ExperimentReport) -> Verdict {
    let mut breaks = Vec::new();
    let mut series = 0;
    for layout in &report.spec.layouts {
        for &n in &report.spec.student_counts {
            let mut cells: Vec<_> = report
                .cells
                .iter()
                .filter(|c| c.layout == *layout && c.student_count == n)
                .collect();
            cells.sort_by_key(|c| c.runtime);
            series += 1;
            for w in cells.windows(2) {
                if w[1].off_casualty.mean < w[0].off_casualty.mean {
                    breaks.push(format!(
                        "{layout}/{n}: {}s {:.2} -> {}s {:.2}",
                        w[0].runtime, w[0].off_casualty.mean, w[1].runtime, w[1].off_casualty.mean
                    ));
                }
            }
        }
    }
    verdict(
        breaks.is_empty(),
        format!(
            "{series} runtime series, {} decreases {:?}",
            breaks.len(),
            breaks
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let layouts = bundled();
    let spec = MatrixSpec::reference_preset(SEEDS_PER_CELL);
    let report = run_matrix(&spec, None).expect("preset matrix runs");
    let matrix_secs = started.elapsed().as_secs_f64();

    let (det, audit) = determinism_and_audit(&layouts, &spec, &report);
    let results = [
        ("1", "directional reproduction", directional(&report)),
        ("2", "reference-table arithmetic", reference_arithmetic()),
        ("3", "equation oracles", equation_oracles()),
        ("4", "determinism", det),
        ("5", "pairing", pairing(&layouts, &spec)),
        ("6", "conservation and audit", audit),
        ("7", "pathfinding oracle", pathfinding_oracle()),
        ("8", "parser golden", parser_golden(&layouts)),
        ("9", "runtime monotonicity", monotonicity(&report)),
    ];
    let mut failed = 0;
    for (id, name, v) in &results {
        println!(
            "{} [{id}] {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "matrix: {} cells x {} seeds in {:.1}s; total {:.1}s; {} of {} criteria passed",
        report.cells.len(),
        SEEDS_PER_CELL,
        matrix_secs,
        started.elapsed().as_secs_f64(),
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
