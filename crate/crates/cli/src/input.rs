use std::path::Path;

use anyhow::{bail, Context, Result};
use engn_core::graph::{generate_synthetic, load_edge_list};
use engn_core::model::load_weight_matrix;
use engn_core::sim::SimConfig;
use engn_core::{Aggregator, Graph, LayerSpec, ModelKind};

use crate::{GraphArgs, ModelArgs};

pub const DEFAULT_SYNTHETIC: &str = "n=1000,e=8000";

/// Flag, then `ENGN_SEED`, then 1.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("ENGN_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("ENGN_SEED={v:?} is not an integer")),
        Err(_) => Ok(1),
    }
}

/// Parses `n=...,e=...[,seed=...]`.
pub fn synthetic_graph(spec: &str, default_seed: u64) -> Result<Graph> {
    let (mut n, mut e, mut seed) = (None, None, default_seed);
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .with_context(|| format!("synthetic spec item {part:?} is not key=value"))?;
        let v = v.trim();
        match k.trim() {
            "n" => n = Some(v.parse().with_context(|| format!("bad n {v:?}"))?),
            "e" => e = Some(v.parse().with_context(|| format!("bad e {v:?}"))?),
            "seed" => seed = v.parse().with_context(|| format!("bad seed {v:?}"))?,
            other => bail!("unknown synthetic key {other:?} (expected n, e, seed)"),
        }
    }
    let (Some(n), Some(e)) = (n, e) else {
        bail!("synthetic spec {spec:?} needs both n and e");
    };
    Ok(generate_synthetic(n, e, seed)?)
}

pub fn load_graph(args: &GraphArgs, seed: u64) -> Result<Graph> {
    match (&args.graph, &args.synthetic) {
        (Some(path), _) => load_edge_list(path, args.num_vertices).map_err(Into::into),
        (None, Some(spec)) => synthetic_graph(spec, seed),
        (None, None) => synthetic_graph(DEFAULT_SYNTHETIC, seed),
    }
}

pub fn parse_dims(dims: &[String]) -> Result<Vec<(usize, usize)>> {
    dims.iter()
        .map(|d| {
            let (f, h) = d.split_once(':').with_context(|| format!("layer dims {d:?} are not F:H"))?;
            let f: usize = f.trim().parse().with_context(|| format!("bad input dim in {d:?}"))?;
            let h: usize = h.trim().parse().with_context(|| format!("bad output dim in {d:?}"))?;
            Ok((f, h))
        })
        .collect()
}

pub fn build_layers(args: &ModelArgs, g: &Graph, seed: u64) -> Result<Vec<LayerSpec>> {
    let kind: ModelKind = args.model.parse()?;
    let dims = parse_dims(&args.dims)?;
    if dims.is_empty() {
        bail!("at least one layer is required");
    }
    if !args.weights.is_empty() && args.weights.len() != dims.len() {
        bail!(
            "{} weight files given for {} layers; pass one per layer",
            args.weights.len(),
            dims.len()
        );
    }
    let aggregator: Option<Aggregator> = args.aggregator.as_deref().map(str::parse).transpose()?;
    let relations = args.relations.unwrap_or_else(|| g.num_relations());
    let mut layers = Vec::with_capacity(dims.len());
    for (l, &(f, h)) in dims.iter().enumerate() {
        let mut layer = LayerSpec::random(kind, f, h, relations, seed.wrapping_add(l as u64))?;
        if let Some(path) = args.weights.get(l) {
            layer = with_weight_file(layer, path)?;
        }
        if let Some(a) = aggregator {
            layer = layer.with_aggregator(a)?;
        }
        layers.push(layer);
    }
    Ok(layers)
}

fn with_weight_file(layer: LayerSpec, path: &Path) -> Result<LayerSpec> {
    let m = load_weight_matrix(path).context("loading weights")?;
    let mut w = layer.weights().clone();
    w.replace_primary(m);
    LayerSpec::new(layer.f(), layer.h(), layer.aggregator(), w)
        .with_context(|| format!("weights {} do not fit layer {}:{}", path.display(), layer.f(), layer.h()))
}

/// Config file first, then `--set` pairs; typed flags are applied by the caller.
pub fn base_config(file: Option<&Path>, sets: &[String]) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        cfg.apply_kv(&text).with_context(|| format!("in config {}", path.display()))?;
    }
    for s in sets {
        let (k, v) = s.split_once('=').with_context(|| format!("--set {s:?} is not key=value"))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}
