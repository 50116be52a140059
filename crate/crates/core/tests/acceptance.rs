//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::io::{BufReader, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use dc2g::bridge::{read_frame, write_frame, BridgeClient, HANDSHAKE};
use dc2g::costmap::{decode_c2g, dijkstra_cost_to_go, encode_c2g, traversable_mask, CellCost};
use dc2g::dataset::{build_training_set, generate_mask, generate_worlds, mask_map, verify_dataset, DatasetConfig, MaskSpec};
use dc2g::estimator::{CostToGoEstimator, EstimatorError, OracleEstimator};
use dc2g::eval::benchmark::{run_benchmark, BenchmarkConfig, BenchmarkReport, EstimatorKind, PlannerSpec};
use dc2g::eval::metrics::{classify_pixels, precision_recall, PixelClassTask};
use dc2g::planner::{oracle_plan, render_belief, PlanMode};
use dc2g::semantic::{encode_png, BinaryGrid, Cell, RED};
use dc2g::world::t5_world;
use dc2g::{Belief, EpisodeStatus, SensorConfig};
use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Distances by repeated relaxation until nothing changes.
fn brute_force_distances(tr: &BinaryGrid, goal: Cell) -> Vec<CellCost> {
    let (w, h) = tr.dims();
    let mut d: Vec<Option<u32>> = vec![None; w * h];
    d[goal.row * w + goal.col] = Some(0);
    loop {
        let mut changed = false;
        for r in 0..h {
            for c in 0..w {
                if !tr.get(Cell::new(r, c)) {
                    continue;
                }
                let best = Cell::new(r, c)
                    .neighbors4(w, h)
                    .filter_map(|n| d[n.row * w + n.col])
                    .min()
                    .map(|m| m + 1);
                let cur = &mut d[r * w + c];
                if let Some(b) = best {
                    if cur.is_none_or(|x| b < x) {
                        *cur = Some(b);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    tr.bits()
        .iter()
        .zip(d)
        .map(|(&t, d)| match (t, d) {
            (false, _) => CellCost::Untraversable,
            (true, Some(x)) => CellCost::Finite(x),
            (true, None) => CellCost::Unreachable,
        })
        .collect()
}

fn dijkstra_equivalence() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..200 {
        let density = rng.gen_range(0.3..0.9);
        let mut tr = BinaryGrid::from_fn(20, 20, |_| rng.gen_bool(density));
        let goal = Cell::new(rng.gen_range(0..20), rng.gen_range(0..20));
        tr.set(goal, true);
        let field = dijkstra_cost_to_go(&tr, goal).map_err(|e| e.to_string())?;
        ensure(field.costs() == brute_force_distances(&tr, goal).as_slice(), format!("grid {i} differs"))?;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 5.0, format!("took {secs:.2}s"))?;
    Ok(format!("200 grids identical in {secs:.2}s"))
}

fn t5_encoding() -> Check {
    let (grid, goal) = t5_world();
    let field = dijkstra_cost_to_go(&traversable_mask(&grid), goal).map_err(|e| e.to_string())?;
    let img = encode_c2g(&field).map_err(|e| e.to_string())?;
    let expected = [
        ((1, 2), 255),
        ((2, 2), 213),
        ((3, 2), 170),
        ((4, 2), 128),
        ((4, 1), 85),
        ((4, 3), 85),
        ((4, 0), 43),
        ((4, 4), 43),
    ];
    for cell in grid.iter_cells() {
        let px = img.get_pixel(cell.col as u32, cell.row as u32).0;
        match expected.iter().find(|(rc, _)| *rc == (cell.row, cell.col)) {
            Some(&(_, g)) => ensure(px == [g; 3], format!("{cell:?} is {px:?}, want gray {g}"))?,
            None => ensure(px == RED, format!("{cell:?} should be red, is {px:?}"))?,
        }
    }
    let scores = decode_c2g(&img, 5, 5);
    for &(a, _) in &expected {
        for &(b, _) in &expected {
            let (ca, cb) = (Cell::new(a.0, a.1), Cell::new(b.0, b.1));
            let (da, db) = (field.get(ca).finite().unwrap(), field.get(cb).finite().unwrap());
            if da < db {
                ensure(scores.get(ca) > scores.get(cb), format!("decoded order broken between {a:?} and {b:?}"))?;
            }
        }
    }
    Ok("8 grays and 17 reds exact, decoded order strict".into())
}

fn training_pairs() -> Check {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let worlds = generate_worlds(31, 50, 50, 31).map_err(|e| e.to_string())?;
    let config = DatasetConfig {
        seed: 31,
        split: [1.0, 0.0, 0.0],
        ..Default::default()
    };
    let manifest = build_training_set(&worlds, 256, dir.path(), &config).map_err(|e| e.to_string())?;
    ensure(manifest.pairs.len() == 7936, format!("{} pairs", manifest.pairs.len()))?;
    let checked = verify_dataset(dir.path()).map_err(|e| e.to_string())?;
    ensure(checked == 7936, format!("verified {checked}"))?;
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 120.0, format!("took {secs:.1}s"))?;
    Ok(format!("7936 pairs written and verified in {secs:.1}s"))
}

const SWEEP_PLANNERS: [PlannerSpec; 4] = [
    PlannerSpec::Oracle,
    PlannerSpec::Frontier,
    PlannerSpec::Dc2g(EstimatorKind::Oracle),
    PlannerSpec::Dc2g(EstimatorKind::Heuristic),
];

struct Sweep {
    report: BenchmarkReport,
    secs: f64,
}

fn sweep() -> Result<Sweep, String> {
    let config = BenchmarkConfig {
        worlds: 100,
        dims: 50,
        seed: 100,
        starts_per_world: 3,
        planners: SWEEP_PLANNERS.to_vec(),
        max_steps: 10_000,
        ..Default::default()
    };
    let started = Instant::now();
    let report = run_benchmark(&config, None).map_err(|e| e.to_string())?;
    Ok(Sweep {
        report,
        secs: started.elapsed().as_secs_f64(),
    })
}

fn completeness(sweep: &Sweep) -> Check {
    for spec in &SWEEP_PLANNERS[1..] {
        let rows: Vec<_> = sweep.report.rows_for(*spec).collect();
        ensure(rows.len() == 300, format!("{spec}: {} rows", rows.len()))?;
        let bad: Vec<_> = rows.iter().filter(|r| r.status != EpisodeStatus::ReachedGoal).collect();
        ensure(bad.is_empty(), format!("{spec}: {} episodes did not reach the goal, first {:?}", bad.len(), bad.first()))?;
    }
    let sealed = BenchmarkConfig {
        worlds: 10,
        seed: 7,
        starts_per_world: 1,
        planners: SWEEP_PLANNERS.to_vec(),
        sealed: true,
        ..Default::default()
    };
    let report = run_benchmark(&sealed, None).map_err(|e| e.to_string())?;
    ensure(report.rows.len() == 40, "sealed sweep row count")?;
    for row in &report.rows {
        ensure(row.status == EpisodeStatus::GaveUp, format!("sealed {} {}: {:?}", row.world, row.planner, row.status))?;
    }
    Ok("900/900 episodes reached the goal; 40/40 sealed episodes gave up".into())
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean over episodes of Frontier steps divided by `planner` steps.
fn step_ratio(report: &BenchmarkReport, planner: PlannerSpec) -> f64 {
    let frontier: Vec<_> = report.rows_for(PlannerSpec::Frontier).collect();
    let other: Vec<_> = report.rows_for(planner).collect();
    mean(frontier.iter().zip(&other).map(|(f, o)| {
        assert_eq!((&f.world, f.start_index), (&o.world, o.start_index));
        f.steps as f64 / o.steps.max(1) as f64
    }))
}

fn context_benefit(sweep: &Sweep) -> Check {
    let extra = |p: PlannerSpec| mean(sweep.report.rows_for(p).filter_map(|r| r.extra_pct));
    let dc2g = PlannerSpec::Dc2g(EstimatorKind::Oracle);
    let heuristic = PlannerSpec::Dc2g(EstimatorKind::Heuristic);
    let (e_dc2g, e_frontier, e_heur) = (extra(dc2g), extra(PlannerSpec::Frontier), extra(heuristic));
    let ratio = step_ratio(&sweep.report, dc2g);
    let control = step_ratio(&sweep.report, heuristic);
    ensure(e_dc2g < e_frontier, format!("dc2g extra {e_dc2g:.1}% not below frontier {e_frontier:.1}%"))?;
    ensure(ratio >= 1.5, format!("frontier/dc2g step ratio {ratio:.2}"))?;
    ensure(control < 1.5, format!("heuristic control ratio {control:.2} shows a gap"))?;
    ensure(sweep.secs < 120.0, format!("sweep took {:.1}s", sweep.secs))?;
    Ok(format!(
        "extra%: dc2g {e_dc2g:.1}, frontier {e_frontier:.1}, heuristic {e_heur:.1}; frontier/dc2g ratio {ratio:.2}, frontier/heuristic {control:.2}; {:.1}s",
        sweep.secs
    ))
}

fn oracle_optimality(sweep: &Sweep) -> Check {
    let rows: Vec<_> = sweep.report.rows_for(PlannerSpec::Oracle).collect();
    ensure(rows.iter().all(|r| r.extra_pct == Some(0.0)), "an oracle row has nonzero extra time")?;
    let worlds = generate_worlds(100, 50, 50, 555).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    for world in &worlds {
        let field = dijkstra_cost_to_go(&traversable_mask(&world.grid), world.goal).map_err(|e| e.to_string())?;
        let reachable: Vec<Cell> = world.grid.iter_cells().filter(|&c| field.get(c).finite().is_some()).collect();
        let cell = reachable[rng.gen_range(0..reachable.len())];
        let pose = dc2g::Pose { cell, heading: dc2g::Heading::ALL[rng.gen_range(0..4)] };
        let out = oracle_plan(&world.grid, pose, world.goal).map_err(|e| e.to_string())?;
        let PlanMode::GoalPhase { path } = out.mode else {
            return Err("oracle returned a non goal-phase plan".into());
        };
        ensure(Some(path.len() as u32 - 1) == field.get(cell).finite(), format!("path length mismatch at {cell:?}"))?;
    }
    Ok(format!("{} oracle rows at 0%; 100 goal paths match Dijkstra", rows.len()))
}

fn grid4(rows: [&str; 4]) -> BinaryGrid {
    BinaryGrid::from_fn(4, 4, |c| rows[c.row].as_bytes()[c.col] == b'1')
}

fn metric_consistency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for i in 0..50 {
        let mut tr = BinaryGrid::from_fn(24, 24, |_| rng.gen_bool(0.65));
        let goal = Cell::new(rng.gen_range(0..24), rng.gen_range(0..24));
        tr.set(goal, true);
        let field = dijkstra_cost_to_go(&tr, goal).map_err(|e| e.to_string())?;
        let img = encode_c2g(&field).map_err(|e| e.to_string())?;
        ensure(classify_pixels(&img, PixelClassTask::Traversable) == field.finite_mask(), format!("field {i}"))?;
    }
    // (pred, truth, tp, fp, fn), counted by hand
    type Case = ([&'static str; 4], [&'static str; 4], usize, usize, usize);
    let cases: [Case; 10] = [
        (["0000"; 4], ["0000"; 4], 0, 0, 0),
        (["1111"; 4], ["1111"; 4], 16, 0, 0),
        (["1111"; 4], ["0000"; 4], 0, 16, 0),
        (["0000"; 4], ["1111"; 4], 0, 0, 16),
        (["1111", "0000", "0000", "0000"], ["1000"; 4], 1, 3, 3),
        (["1010", "0101", "1010", "0101"], ["1111"; 4], 8, 0, 8),
        (["1111", "1111", "0000", "0000"], ["1100"; 4], 4, 4, 4),
        (["1000", "0000", "0000", "0000"], ["1000", "0000", "0000", "0001"], 1, 0, 1),
        (["1000", "0100", "0010", "0001"], ["0001", "0010", "0100", "1000"], 0, 4, 4),
        (["1110", "1100", "1000", "0000"], ["1000", "1100", "1110", "0000"], 4, 2, 2),
    ];
    for (k, (pred, truth, tp, fp, fn_)) in cases.iter().enumerate() {
        let pr = precision_recall(&grid4(*pred), &grid4(*truth)).map_err(|e| e.to_string())?;
        ensure((pr.tp, pr.fp, pr.fn_) == (*tp, *fp, *fn_), format!("case {k}: counts {:?}", (pr.tp, pr.fp, pr.fn_)))?;
        let rate = |n: usize, d: usize| (d > 0).then(|| n as f64 / d as f64);
        ensure(pr.precision == rate(*tp, tp + fp) && pr.recall == rate(*tp, tp + fn_), format!("case {k}: rates"))?;
    }
    Ok("50 fields consistent; 10 confusion matrices match".into())
}

fn fake_server(response: Vec<u8>) -> Result<BridgeClient, EstimatorError> {
    let (c2s_r, c2s_w) = std::io::pipe()?;
    let (s2c_r, mut s2c_w) = std::io::pipe()?;
    thread::spawn(move || {
        let mut r = BufReader::new(c2s_r);
        let mut line = String::new();
        std::io::BufRead::read_line(&mut r, &mut line).ok();
        s2c_w.write_all(HANDSHAKE.as_bytes()).ok();
        if read_frame(&mut r).is_ok() {
            write_frame(&mut s2c_w, &response).ok();
        }
    });
    BridgeClient::new(s2c_r, c2s_w, Duration::from_secs(10))
}

fn served_exit(payload: &[u8]) -> Result<bool, String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_dc2g"))
        .args(["serve-oracle", "--seed", "0"])
        .env("DC2G_BRIDGE", "stdio")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut input = HANDSHAKE.as_bytes().to_vec();
    input.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    input.extend_from_slice(payload);
    child.stdin.take().unwrap().write_all(&input).map_err(|e| e.to_string())?;
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    Ok(!out.status.success() && out.stdout == HANDSHAKE.as_bytes())
}

fn bridge_conformance() -> Check {
    let world = dc2g::world::generate_world(&dc2g::WorldSpec::with_seed(88, 50)).map_err(|e| e.to_string())?;
    let args: Vec<String> = ["serve-oracle", "--seed", "88", "--dims", "50"].map(String::from).to_vec();
    let mut remote = BridgeClient::spawn(env!("CARGO_BIN_EXE_dc2g"), &args, Duration::from_secs(30)).map_err(|e| e.to_string())?;
    let mut local = OracleEstimator::new(world.clone()).map_err(|e| e.to_string())?;
    for k in 0..20usize {
        let spec = MaskSpec {
            seed: k as u64,
            sweep_count: if k == 0 { 0 } else { k * 7 },
            sensor: SensorConfig::default(),
            start: None,
        };
        let belief = if k == 19 {
            Belief::blank_like(&world.grid)
        } else {
            let mask = generate_mask(&world.grid, &spec).map_err(|e| e.to_string())?;
            Belief::from_map(mask_map(&world.grid, &mask))
        };
        let img = render_belief(&belief);
        let a = remote.estimate(&img).map_err(|e| e.to_string())?;
        let b = local.estimate(&img).map_err(|e| e.to_string())?;
        ensure(encode_png(&a) == encode_png(&b) && a == b, format!("belief {k} differs"))?;
    }
    let probe = RgbImage::new(256, 256);
    let bad_png = fake_server(b"definitely not png".to_vec()).map_err(|e| e.to_string())?.estimate(&probe);
    ensure(matches!(bad_png, Err(EstimatorError::MalformedFrame(_))), format!("garbage frame gave {bad_png:?}"))?;
    let small = fake_server(encode_png(&RgbImage::new(100, 100))).map_err(|e| e.to_string())?.estimate(&probe);
    ensure(matches!(small, Err(EstimatorError::BadImageDims { width: 100, height: 100 })), format!("100x100 gave {small:?}"))?;
    ensure(served_exit(&[])?, "server accepted a zero-length frame")?;
    ensure(served_exit(b"junk")?, "server accepted a malformed frame")?;
    ensure(served_exit(&encode_png(&RgbImage::new(100, 100)))?, "server accepted a 100x100 request")?;
    Ok("20 beliefs byte-identical; malformed, zero-length and wrong-size frames rejected".into())
}

fn determinism() -> Check {
    let config = BenchmarkConfig {
        worlds: 8,
        seed: 99,
        starts_per_world: 2,
        planners: SWEEP_PLANNERS.to_vec(),
        ..Default::default()
    };
    let run = |threads| {
        run_benchmark(&BenchmarkConfig { threads: Some(threads), ..config.clone() }, None)
            .map(|r| (r.csv_string(), r.summary_json()))
            .map_err(|e| e.to_string())
    };
    let a = run(1)?;
    let b = run(1)?;
    let c = run(4)?;
    ensure(a == b, "two single-thread runs differ")?;
    ensure(a == c, "1 vs 4 threads differ")?;
    Ok(format!("{} CSV bytes identical across runs and thread counts", a.0.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Check| {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {name}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg} [{secs:.1}s]");
            }
        }
    };
    report("dijkstra_oracle_equivalence", &mut dijkstra_equivalence);
    report("t5_encoding_golden", &mut t5_encoding);
    report("training_pair_arithmetic", &mut training_pairs);
    let shared = sweep();
    let shared = &shared;
    let with_sweep = |f: fn(&Sweep) -> Check| {
        move || match shared {
            Ok(s) => f(s),
            Err(e) => Err(format!("sweep failed: {e}")),
        }
    };
    report("completeness", &mut with_sweep(completeness));
    report("context_benefit", &mut with_sweep(context_benefit));
    report("oracle_planner_optimality", &mut with_sweep(oracle_optimality));
    report("metric_consistency", &mut metric_consistency);
    report("bridge_conformance", &mut bridge_conformance);
    report("determinism", &mut determinism);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
