//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use engn_core::dataflow::{aggregate_cycles, hash_edges, EdgeBankLayout, RingSchedule, SourceBatch};
use engn_core::graph::{generate_rmat, generate_synthetic, grid_partition, load_edge_list, RmatParams};
use engn_core::model::{dense_oracle, forward_layer};
use engn_core::schedule::{count_ops, dasr_decide, io_cost, tile_order};
use engn_core::sim::{default_q, run_report, simulate_layer, Plan, SimConfig, SweepPoint};
use engn_core::{Aggregator, Edge, Graph, LayerSpec, Matrix, ModelKind, StageOrder, TileMajor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden_trace() -> Outcome {
    let g = load_edge_list(fixture("example_graph.el"), None).map_err(|e| e.to_string())?;
    let layer = LayerSpec::random(ModelKind::Gcn, 5, 3, 1, 11).unwrap();
    let cfg = SimConfig {
        rows: 4,
        cols: 3,
        trace: true,
        ..SimConfig::default()
    };
    let x = Matrix::random(4, 5, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
    let plan = Plan::auto(&layer, 1).unwrap();
    let out = simulate_layer(&g, &grid_partition(&g, 1).unwrap(), &layer, &x, &plan, &cfg).map_err(|e| e.to_string())?;
    let got: Vec<String> = out.trace.iter().map(ToString::to_string).collect();
    let text = std::fs::read_to_string(fixture("golden_trace.txt")).map_err(|e| e.to_string())?;
    let want: Vec<String> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(str::to_string)
        .collect();
    ensure(got == want, || format!("trace {got:?} != fixture {want:?}"))?;
    Ok("P(0,0)@4 A(0,0)@8 O(0,0)@9, all 12 events match".into())
}

fn dasr_counts() -> Outcome {
    let order = dasr_decide(1433, 16, Aggregator::Sum, ModelKind::Gcn);
    let fau = count_ops(2708, 10556, 1433, 16, StageOrder::Fau).accumulations;
    let afu = count_ops(2708, 10556, 1433, 16, StageOrder::Afu).accumulations;
    let ratio = afu as f64 / fau as f64;
    ensure(order == StageOrder::Fau, || format!("chose {order}"))?;
    ensure(fau == 168_896 && afu == 15_126_748, || format!("{fau} / {afu}"))?;
    ensure(format!("{ratio:.2}") == "89.56", || format!("ratio {ratio}"))?;
    Ok(format!("FAU {fau}, AFU {afu}, ratio {ratio:.2}x"))
}

struct Case {
    g: Graph,
    f: usize,
    h: usize,
    relations: usize,
    x: Matrix<f64>,
}

fn corpus() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100)
        .map(|_| {
            let n = rng.gen_range(1..=64usize);
            let e = rng.gen_range(0..=4 * n);
            let relations = rng.gen_range(1..=3usize);
            let edges = (0..e)
                .map(|_| {
                    Edge::with_relation(
                        rng.gen_range(0..n as u32),
                        rng.gen_range(0..n as u32),
                        rng.gen_range(0..relations as u16),
                    )
                })
                .collect();
            let f = rng.gen_range(1..=32);
            let h = rng.gen_range(1..=32);
            let x = Matrix::from_fn(n, f, |_, _| rng.gen_range(-1.0..=1.0));
            Case {
                g: Graph::from_edges(n, edges).unwrap(),
                f,
                h,
                relations,
                x,
            }
        })
        .collect()
}

fn functional_equivalence() -> Outcome {
    let kinds = [ModelKind::Gcn, ModelKind::GatedGcn, ModelKind::Grn, ModelKind::Rgcn, ModelKind::GsPool];
    let (mut worst_float, mut worst_fixed) = (0.0f64, 0.0f64);
    for (k, case) in corpus().iter().enumerate() {
        for kind in kinds {
            let layer = LayerSpec::random(kind, case.f, case.h, case.relations, k as u64).unwrap();
            let oracle = dense_oracle(&layer, &case.x, &case.g).unwrap();
            let float = forward_layer(&layer, &case.x, &case.g, StageOrder::Fau).unwrap();
            let fixed = forward_layer(&layer, &case.x.to_fixed(), &case.g, StageOrder::Fau).unwrap();
            let df = float.max_abs_diff(&oracle);
            let dx = fixed.convert::<f64>().max_abs_diff(&oracle);
            ensure(df <= 1e-9, || format!("graph {k} {kind}: float diff {df:e}"))?;
            ensure(dx <= 1e-2, || format!("graph {k} {kind}: fixed diff {dx:e}"))?;
            worst_float = worst_float.max(df);
            worst_fixed = worst_fixed.max(dx);
        }
    }
    Ok(format!("500 layer runs, max float diff {worst_float:.1e}, max fixed diff {worst_fixed:.1e}"))
}

fn stage_order_invariance() -> Outcome {
    let mut worst = 0.0f64;
    for (k, case) in corpus().iter().enumerate() {
        let layer = LayerSpec::random(ModelKind::Gcn, case.f, case.h, 1, k as u64).unwrap();
        let fau = forward_layer(&layer, &case.x, &case.g, StageOrder::Fau).unwrap();
        let afu = forward_layer(&layer, &case.x, &case.g, StageOrder::Afu).unwrap();
        let d = fau.max_abs_diff(&afu);
        ensure(d <= 1e-9, || format!("graph {k}: diff {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!("100 graphs, max FAU/AFU diff {worst:.1e}"))
}

fn io_cross_check() -> Outcome {
    let n = 64usize;
    let g = generate_synthetic(n, 512, 5).unwrap();
    let cfg = SimConfig {
        davc_enabled: false,
        prefetch_enabled: false,
        ..SimConfig::default()
    };
    let mut points = 0;
    for (f, h) in [(8usize, 2usize), (2, 8), (16, 16), (5, 3), (3, 7)] {
        let layer = LayerSpec::random(ModelKind::Gcn, f, h, 1, 3).unwrap();
        let x = Matrix::random(n, f, 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        for q in [1usize, 2, 4, 8] {
            let tiles = grid_partition(&g, q).unwrap();
            let (qq, ff, hh, per) = (q as u64, f as u64, h as u64, (n / q) as u64);
            let reuse = qq * qq - qq + 1;
            let closed = [
                (TileMajor::Column, (reuse * ff + qq * hh) * per, qq * hh * per),
                (TileMajor::Row, (qq * ff + reuse * hh) * per, qq * qq * hh * per),
            ];
            for (major, read, write) in closed {
                let plan = Plan {
                    order: StageOrder::Fau,
                    tile_order: tile_order(q, major, true),
                };
                let s = simulate_layer(&g, &tiles, &layer, &x, &plan, &cfg).unwrap().stats;
                ensure(s.vertex_read_words == read && s.vertex_write_words == write, || {
                    format!(
                        "q={q} f={f} h={h} {major}: sim {}/{} vs closed form {read}/{write}",
                        s.vertex_read_words, s.vertex_write_words
                    )
                })?;
                points += 1;
            }
            let io = io_cost(qq, ff, hh).unwrap();
            ensure(io.total_chosen() <= io.total_col().min(io.total_row()), || {
                format!("adaptive total exceeds min at q={q} f={f} h={h}")
            })?;
        }
    }
    Ok(format!("{points} (q, dims, order) points match exactly; adaptive <= min"))
}

fn edge_reorganization() -> Outcome {
    let ring = RingSchedule::new(3).unwrap();
    let batch = SourceBatch::new(0, 3);
    let e = Edge::new;
    let inst = EdgeBankLayout::from_banks(vec![vec![e(2, 0), e(0, 0)], vec![e(0, 1)], vec![e(1, 2)]]).unwrap();
    let before = aggregate_cycles(&inst, ring, &batch, false).unwrap();
    let after = aggregate_cycles(&inst, ring, &batch, true).unwrap();
    ensure((before, after) == (6, 3), || format!("instance gave {before} -> {after}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut speedup_sum = 0.0;
    for trial in 0..1000 {
        let r = rng.gen_range(2..=16usize);
        let dsts = rng.gen_range(r..=4 * r) as u32;
        let m = rng.gen_range(1..=3 * r);
        let edges: Vec<Edge> = (0..m)
            .map(|_| Edge::new(rng.gen_range(0..r as u32), rng.gen_range(0..dsts)))
            .collect();
        let ring = RingSchedule::new(r).unwrap();
        let batch = SourceBatch::new(0, r);
        let layout = hash_edges(&edges, r).unwrap();
        let a = aggregate_cycles(&layout, ring, &batch, false).unwrap();
        let b = aggregate_cycles(&layout, ring, &batch, true).unwrap();
        ensure(b <= a, || format!("layout {trial}: reorganized {b} > original {a}"))?;
        speedup_sum += a as f64 / b as f64;
    }
    let mean = speedup_sum / 1000.0;
    ensure(mean > 1.0, || format!("mean speedup {mean}"))?;
    Ok(format!("instance 6 -> 3; 1000 random layouts never worse, mean speedup {mean:.2}x"))
}

fn utilization_invariance() -> Outcome {
    let n = 256;
    let g = generate_synthetic(n, 2048, 3).unwrap();
    let cfg = SimConfig::default();
    let mut parts = Vec::new();
    for f in [63usize, 64, 100, 1024] {
        let layer = LayerSpec::random(ModelKind::Gcn, f, 16, 1, 4).unwrap();
        let x = Matrix::random(n, f, 1.0, &mut ChaCha8Rng::seed_from_u64(f as u64));
        let q = default_q(n, 16, &cfg).unwrap();
        let plan = Plan::auto(&layer, q).unwrap();
        let s = simulate_layer(&g, &grid_partition(&g, q).unwrap(), &layer, &x, &plan, &cfg)
            .unwrap()
            .stats;
        ensure(s.feature_utilization == 1.0, || format!("F={f}: utilization {}", s.feature_utilization))?;
        parts.push(format!("F={f}"));
    }
    Ok(format!("feature-stage utilization exactly 100% for {}", parts.join(", ")))
}

fn davc_monotonicity() -> Outcome {
    let g = generate_rmat(10_000, 200_000, 1, RmatParams::default()).unwrap();
    let layers = vec![LayerSpec::random(ModelKind::Gcn, 16, 16, 1, 1).unwrap()];
    let mut points: Vec<SweepPoint> = [16usize, 32, 64, 128]
        .iter()
        .map(|kb| {
            SweepPoint::new(SimConfig {
                davc_bytes: kb * 1024,
                rho: 1.0,
                ..SimConfig::default()
            })
        })
        .collect();
    points.push(SweepPoint::new(SimConfig {
        rho: 0.0,
        ..SimConfig::default()
    }));
    let rows = run_report(&g, &layers, &points, 1).map_err(|e| e.to_string())?;
    let hits: Vec<u64> = rows[..4].iter().map(|r| r.davc_hits).collect();
    ensure(hits.windows(2).all(|w| w[0] <= w[1]), || format!("hits {hits:?}"))?;
    let (static_rate, lru_rate) = (rows[2].davc_hit_rate, rows[4].davc_hit_rate);
    ensure(static_rate >= lru_rate, || format!("rho=1 {static_rate:.4} < rho=0 {lru_rate:.4}"))?;
    Ok(format!(
        "hits {hits:?} over 16/32/64/128 KB; 64 KB hit rate rho=1 {static_rate:.3} >= rho=0 {lru_rate:.3}"
    ))
}

fn tiling_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for k in 0..200 {
        let n = rng.gen_range(8..=300usize);
        let e = rng.gen_range(0..=6 * n);
        let edges: Vec<Edge> = (0..e)
            .map(|_| Edge::new(rng.gen_range(0..n as u32), rng.gen_range(0..n as u32)))
            .collect();
        let g = Graph::from_edges(n, edges).unwrap();
        for q in 1..=8 {
            let t = grid_partition(&g, q).unwrap();
            let iv = t.intervals();
            ensure(iv.len() == q && iv[0].lo == 0 && iv[q - 1].hi as usize == n, || {
                format!("graph {k} q={q}: intervals do not cover [0, {n})")
            })?;
            ensure(iv.windows(2).all(|w| w[0].hi == w[1].lo), || format!("graph {k} q={q}: gap"))?;
            let (lo, hi) = (
                iv.iter().map(|i| i.len()).min().unwrap(),
                iv.iter().map(|i| i.len()).max().unwrap(),
            );
            ensure(hi - lo <= 1, || format!("graph {k} q={q}: sizes {lo}..{hi}"))?;
            let mut count: HashMap<(u32, u32), i64> = HashMap::new();
            for e in g.edges() {
                *count.entry((e.src, e.dst)).or_default() += 1;
            }
            for i in 0..q {
                for j in 0..q {
                    for e in t.shard(i, j) {
                        ensure(iv[i].contains(e.src) && iv[j].contains(e.dst), || {
                            format!("graph {k} q={q}: edge {}->{} in shard ({i},{j})", e.src, e.dst)
                        })?;
                        *count.entry((e.src, e.dst)).or_default() -= 1;
                    }
                }
            }
            ensure(count.values().all(|&c| c == 0), || format!("graph {k} q={q}: multiset mismatch"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (graph, q) partitions disjoint and covering"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("golden trace", golden_trace),
        ("DASR operation counts", dasr_counts),
        ("functional equivalence", functional_equivalence),
        ("stage-order invariance", stage_order_invariance),
        ("I/O model cross-check", io_cross_check),
        ("edge reorganization", edge_reorganization),
        ("utilization invariance", utilization_invariance),
        ("DAVC monotonicity", davc_monotonicity),
        ("tiling correctness", tiling_invariants),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {}. {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {}. {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
