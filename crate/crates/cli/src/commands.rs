use std::fs::File;
use std::io::BufWriter;

use anyhow::Context;
use engn_core::dataflow::{bank_schedule, hash_edges, reorganize, write_bank_schedule_csv, RingSchedule, SourceBatch};
use engn_core::graph::{generate_synthetic, load_edge_list, write_edge_list, Edge};
use engn_core::schedule::{io_cost, map_strategy_metrics, MapStrategy};
use engn_core::sim::{
    parse_sweep_axis, run_report, sweep_points, write_atomic, write_csv, write_jsonl, ReportRow, SweepPoint,
};
use engn_core::EngnError;

use crate::input::{base_config, build_layers, load_graph, resolve_seed};
use crate::{AnalyzeArgs, GenGraphArgs, RunArgs, SweepArgs, ValidateArgs};

pub enum Failure {
    Usage(String),
    Input(anyhow::Error),
    Invariant(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<EngnError> for Failure {
    fn from(e: EngnError) -> Self {
        Failure::Input(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn check_rows(rows: &[ReportRow]) -> CmdResult {
    for r in rows {
        let lower = r.cycles_feature.max(r.cycles_aggregate) + r.cycles_update;
        if r.cycles_compute < lower || r.cycles_total != r.cycles_compute + r.cycles_stall + r.cycles_fill {
            return Err(Failure::Invariant(format!(
                "point {} layer {}: inconsistent cycle accounting",
                r.point, r.layer
            )));
        }
    }
    Ok(())
}

fn write_reports(prefix: &str, rows: &[ReportRow]) -> anyhow::Result<()> {
    let mut json = Vec::new();
    write_jsonl(rows, &mut json)?;
    write_atomic(format!("{prefix}.jsonl"), &json)?;
    let mut csv = Vec::new();
    write_csv(rows, &mut csv)?;
    write_atomic(format!("{prefix}.csv"), &csv)?;
    Ok(())
}

fn print_table(rows: &[ReportRow]) {
    println!(
        "{:>5} {:>5} {:>10} {:>9} {:>4} {:>6} {:>3} {:>14} {:>10} {:>7} {:>8}",
        "point", "layer", "model", "dims", "ord", "tiles", "q", "cycles", "GB moved", "util", "hit rate"
    );
    for r in rows {
        let gb = (r.dram_read_bytes + r.dram_write_bytes) as f64 / 1e9;
        println!(
            "{:>5} {:>5} {:>10} {:>9} {:>4} {:>6} {:>3} {:>14} {:>10.6} {:>6.2}% {:>7.2}%",
            r.point,
            r.layer,
            r.model,
            format!("{}:{}", r.f, r.h),
            r.order,
            r.tile_order,
            r.q,
            r.cycles_total,
            gb,
            100.0 * r.utilization,
            100.0 * r.davc_hit_rate
        );
    }
}

pub fn run(a: RunArgs) -> CmdResult {
    let seed = resolve_seed(a.sim.seed)?;
    let g = load_graph(&a.graph, seed)?;
    let layers = build_layers(&a.model, &g, seed)?;
    let mut point = SweepPoint::new(base_config(a.sim.config.as_deref(), &a.sim.sets)?);
    if let Some(v) = a.sim.rows {
        point.cfg.rows = v;
    }
    if let Some(v) = a.sim.cols {
        point.cfg.cols = v;
    }
    if let Some(v) = a.sim.davc_bytes {
        point.cfg.davc_bytes = v;
    }
    if let Some(v) = a.sim.rho {
        point.cfg.rho = v;
    }
    point.cfg.validate()?;
    point.q = a.sim.q;
    point.set("order", &a.sim.order)?;
    point.set("tile_order", &a.sim.tile_order)?;

    let rows = run_report(&g, &layers, std::slice::from_ref(&point), seed)?;
    check_rows(&rows)?;
    write_reports(&a.out, &rows)?;
    let mut cfg_text = point.cfg.to_kv();
    cfg_text.push_str(&format!(
        "# seed={seed} model={} dims={} q={}\n",
        a.model.model,
        a.model.dims.join(","),
        point.q.map_or("auto".into(), |q| q.to_string())
    ));
    write_atomic(format!("{}.cfg", a.out), cfg_text.as_bytes()).map_err(anyhow::Error::from)?;
    println!("graph: {} vertices, {} edges", g.num_vertices(), g.num_edges());
    print_table(&rows);
    println!("reports: {0}.jsonl {0}.csv {0}.cfg", a.out);
    Ok(())
}

pub fn sweep(a: SweepArgs) -> CmdResult {
    let seed = resolve_seed(a.seed)?;
    let g = load_graph(&a.graph, seed)?;
    let layers = build_layers(&a.model, &g, seed)?;
    let base = SweepPoint::new(base_config(a.config.as_deref(), &a.sets)?);
    let named = [
        ("rows", &a.rows),
        ("cols", &a.cols),
        ("davc_bytes", &a.davc_bytes),
        ("rho", &a.rho),
        ("q", &a.q),
        ("order", &a.order),
        ("tile_order", &a.tile_order),
    ];
    let mut axes = Vec::new();
    for (key, list) in named {
        if let Some(list) = list {
            axes.push(parse_sweep_axis(&format!("{key}={list}"))?);
        }
    }
    for spec in &a.axes {
        axes.push(parse_sweep_axis(spec)?);
    }
    let points = sweep_points(&base, &axes)?;
    for p in &points {
        p.cfg.validate()?;
    }
    let rows = run_report(&g, &layers, &points, seed)?;
    check_rows(&rows)?;
    write_reports(&a.out, &rows)?;
    println!(
        "graph: {} vertices, {} edges; {} points x {} layers",
        g.num_vertices(),
        g.num_edges(),
        points.len(),
        layers.len()
    );
    for (i, p) in points.iter().enumerate() {
        let desc: Vec<String> = axes
            .iter()
            .map(|(k, _)| {
                let v = match k.replace('-', "_").as_str() {
                    "q" => p.q.map_or("auto".into(), |q| q.to_string()),
                    "order" => p.order.map_or("auto".into(), |o| o.to_string()),
                    "tile_order" | "major" => p.major.map_or("adaptive".into(), |m| m.to_string()),
                    other => {
                        let v = serde_json::to_value(&p.cfg).unwrap_or_default();
                        v.get(other).map_or("?".into(), ToString::to_string)
                    }
                };
                format!("{k}={v}")
            })
            .collect();
        println!("point {i}: {}", desc.join(" "));
    }
    print_table(&rows);
    println!("reports: {0}.jsonl {0}.csv", a.out);
    Ok(())
}

pub fn analyze(a: AnalyzeArgs) -> CmdResult {
    let mut printed = false;
    if let Some(q) = a.q {
        let (Some(f), Some(h)) = (a.f, a.h) else {
            return Err(Failure::Usage("--q needs --f and --h".into()));
        };
        let report = io_cost(q, f, h)?;
        let mut v = serde_json::to_value(report).map_err(anyhow::Error::from)?;
        v["kind"] = "io_cost".into();
        v["total_col"] = report.total_col().into();
        v["total_row"] = report.total_row().into();
        v["tie"] = (report.total_col() == report.total_row()).into();
        println!("{v}");
        printed = true;
    }
    if let Some(map) = &a.map {
        let (Some(n), Some(f), Some(h)) = (a.n, a.f, a.h) else {
            return Err(Failure::Usage("--map needs --n, --f and --h".into()));
        };
        let strategies = if map.eq_ignore_ascii_case("all") {
            vec![MapStrategy::Vs, MapStrategy::Vfs, MapStrategy::Hs]
        } else {
            vec![map.parse::<MapStrategy>()?]
        };
        for s in strategies {
            let report = map_strategy_metrics(s, n, f, h, a.r, a.c)?;
            let mut v = serde_json::to_value(report).map_err(anyhow::Error::from)?;
            v["kind"] = "map_strategy".into();
            println!("{v}");
        }
        printed = true;
    }
    if let (Some(path), Some(out)) = (&a.graph, &a.dump_banks) {
        let g = load_edge_list(path, None)?;
        let r = a.r as usize;
        let ring = RingSchedule::new(r)?;
        let mut by_batch: Vec<Vec<Edge>> = vec![Vec::new(); g.num_vertices().div_ceil(r)];
        for e in g.edges() {
            by_batch[e.src as usize / r].push(*e);
        }
        let mut rows = Vec::new();
        for (b, edges) in by_batch.iter().enumerate() {
            if edges.is_empty() {
                continue;
            }
            let start = (b * r) as u32;
            let batch = SourceBatch::new(start, r.min(g.num_vertices() - b * r));
            let layout = reorganize(&hash_edges(edges, r)?, ring, &batch)?;
            rows.extend(bank_schedule(&layout, ring, &batch)?);
        }
        let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
        write_bank_schedule_csv(&rows, BufWriter::new(file))?;
        eprintln!("wrote {} bank schedule rows to {}", rows.len(), out.display());
        printed = true;
    }
    if !printed {
        return Err(Failure::Usage(
            "nothing to analyze: pass --q/--f/--h, --map with --n/--f/--h, or --graph with --dump-banks".into(),
        ));
    }
    Ok(())
}

pub fn gen_graph(a: GenGraphArgs) -> CmdResult {
    let seed = resolve_seed(a.seed)?;
    let g = generate_synthetic(a.n, a.e, seed)?;
    write_edge_list(&g, &a.out)?;
    println!(
        "wrote {} vertices, {} edges (seed {seed}) to {}",
        g.num_vertices(),
        g.num_edges(),
        a.out.display()
    );
    Ok(())
}

pub fn validate(a: ValidateArgs) -> CmdResult {
    let g = load_edge_list(&a.path, a.num_vertices)?;
    g.validate().map_err(|e| Failure::Invariant(e.to_string()))?;
    let max_in = g.in_degree().iter().max().copied().unwrap_or(0);
    println!(
        "OK: {} vertices, {} edges, {} relation(s), max in-degree {max_in}",
        g.num_vertices(),
        g.num_edges(),
        g.num_relations()
    );
    Ok(())
}
