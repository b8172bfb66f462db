use super::{Aggregator, LayerSpec, ModelKind, WeightSet};
use crate::error::{EngnError, Result};
use crate::graph::{Edge, Graph};
use crate::matrix::{Matrix, PropertyMatrix};
use crate::scalar::Scalar;
use crate::schedule::StageOrder;

/// Edge list a layer actually reduces over, in canonical order, with an
/// optional per-edge scaling coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerEdges {
    pub edges: Vec<Edge>,
    pub coef: Option<Vec<f64>>,
}

/// Output of feature extraction: either one row per vertex (indexed by the
/// edge source during aggregation) or one row per layer edge.
#[derive(Debug, Clone, PartialEq)]
pub enum Messages<S> {
    PerVertex(Matrix<S>),
    PerEdge(Matrix<S>),
}

impl<S: Scalar> Messages<S> {
    fn cols(&self) -> usize {
        match self {
            Messages::PerVertex(m) | Messages::PerEdge(m) => m.cols(),
        }
    }

    fn row(&self, edge_index: usize, e: &Edge) -> &[S] {
        match self {
            Messages::PerVertex(m) => m.row(e.src as usize),
            Messages::PerEdge(m) => m.row(edge_index),
        }
    }

    pub fn into_matrix(self) -> Matrix<S> {
        match self {
            Messages::PerVertex(m) | Messages::PerEdge(m) => m,
        }
    }
}

/// GCN symmetric normalization over `A + I`: every vertex gains a self-loop
/// and edge `u -> v` is scaled by `1 / sqrt((out(u) + 1) * (in(v) + 1))`.
pub fn gcn_edge_norm(g: &Graph) -> LayerEdges {
    let n = g.num_vertices();
    let mut edges = Vec::with_capacity(g.num_edges() + n);
    edges.extend_from_slice(g.edges());
    edges.extend((0..n as u32).map(|v| Edge::new(v, v)));
    edges.sort_by_key(Edge::sort_key);
    let dout: Vec<f64> = g.out_degree().iter().map(|&d| (d + 1) as f64).collect();
    let din: Vec<f64> = g.in_degree().iter().map(|&d| (d + 1) as f64).collect();
    let coef = edges
        .iter()
        .map(|e| 1.0 / (dout[e.src as usize] * din[e.dst as usize]).sqrt())
        .collect();
    LayerEdges {
        edges,
        coef: Some(coef),
    }
}

fn rgcn_edge_norm(g: &Graph, num_relations: usize) -> Result<LayerEdges> {
    let n = g.num_vertices();
    let mut count = vec![0u64; n * num_relations];
    for e in g.edges() {
        let r = e.relation_index();
        if r >= num_relations {
            return Err(EngnError::DimensionMismatch(format!(
                "edge {}->{} has relation {r} but the layer has {num_relations}",
                e.src, e.dst
            )));
        }
        count[e.dst as usize * num_relations + r] += 1;
    }
    let coef = g
        .edges()
        .iter()
        .map(|e| 1.0 / count[e.dst as usize * num_relations + e.relation_index()] as f64)
        .collect();
    Ok(LayerEdges {
        edges: g.edges().to_vec(),
        coef: Some(coef),
    })
}

/// The edge set (and coefficients) the layer reduces over.
pub fn layer_edges(layer: &LayerSpec, g: &Graph) -> Result<LayerEdges> {
    match layer.kind() {
        ModelKind::Gcn => Ok(gcn_edge_norm(g)),
        ModelKind::Rgcn => rgcn_edge_norm(g, layer.num_relations()),
        _ => Ok(LayerEdges {
            edges: g.edges().to_vec(),
            coef: None,
        }),
    }
}

pub fn validate_order(layer: &LayerSpec, order: StageOrder) -> Result<()> {
    if order == StageOrder::Afu && !(layer.kind() == ModelKind::Gcn && layer.aggregator() == Aggregator::Sum) {
        return Err(EngnError::InvalidOrder {
            order: order.to_string(),
            kind: layer.kind().to_string(),
            reason: "aggregate can only move ahead of feature extraction for a sum \
                     aggregator with feature extraction linear in the source property"
                .into(),
        });
    }
    Ok(())
}

fn check_rows<S: Scalar>(m: &Matrix<S>, g: &Graph, what: &str) -> Result<()> {
    if m.rows() != g.num_vertices() {
        return Err(EngnError::DimensionMismatch(format!(
            "{what} has {} rows for a {}-vertex graph",
            m.rows(),
            g.num_vertices()
        )));
    }
    Ok(())
}

fn check_cols<S: Scalar>(m: &Matrix<S>, cols: usize, what: &str) -> Result<()> {
    if m.cols() != cols {
        return Err(EngnError::DimensionMismatch(format!(
            "{what} has {} columns, expected {cols}",
            m.cols()
        )));
    }
    Ok(())
}

fn add_bias<S: Scalar>(m: &mut Matrix<S>, bias: &Option<Vec<S>>) {
    if let Some(b) = bias {
        for r in 0..m.rows() {
            for (x, &y) in m.row_mut(r).iter_mut().zip(b) {
                *x = *x + y;
            }
        }
    }
}

/// Feature extraction stage. `props` is N x F.
pub fn feature_extraction<S: Scalar>(
    layer: &LayerSpec,
    props: &PropertyMatrix<S>,
    g: &Graph,
) -> Result<Messages<S>> {
    check_rows(props, g, "property matrix")?;
    check_cols(props, layer.f(), "property matrix")?;
    let weights: WeightSet<S> = layer.weights().cast();
    match &weights {
        WeightSet::Gcn { w, .. } => Ok(Messages::PerVertex(props.matmul(w)?)),
        WeightSet::GsPool { pool, pool_bias, .. } => {
            let mut p = props.matmul(pool)?;
            add_bias(&mut p, &Some(pool_bias.clone()));
            Ok(Messages::PerVertex(p.map(S::relu)))
        }
        WeightSet::Rgcn { .. } | WeightSet::Grn { .. } => Ok(Messages::PerVertex(props.clone())),
        WeightSet::GatedGcn {
            gate_dst, gate_src, ..
        } => {
            let hd = props.matmul(gate_dst)?;
            let hs = props.matmul(gate_src)?;
            let edges = g.edges();
            let f = layer.f();
            let mut out = Matrix::zeros(edges.len(), f);
            for (k, e) in edges.iter().enumerate() {
                let (u, v) = (e.src as usize, e.dst as usize);
                let row = out.row_mut(k);
                for c in 0..f {
                    let gate = (hd.get(v, c) + hs.get(u, c)).sigmoid();
                    row[c] = gate * props.get(u, c);
                }
            }
            Ok(Messages::PerEdge(out))
        }
    }
}

/// Aggregate stage: per-destination reduction in canonical edge order.
pub fn aggregate<S: Scalar>(layer: &LayerSpec, messages: &Messages<S>, g: &Graph) -> Result<PropertyMatrix<S>> {
    let n = g.num_vertices();
    let le = layer_edges(layer, g)?;
    let d = messages.cols();
    match messages {
        Messages::PerVertex(m) => check_rows(m, g, "per-vertex messages")?,
        Messages::PerEdge(m) if m.rows() != le.edges.len() => {
            return Err(EngnError::DimensionMismatch(format!(
                "{} per-edge messages for {} edges",
                m.rows(),
                le.edges.len()
            )))
        }
        Messages::PerEdge(_) => {}
    }
    let coef: Option<Vec<S>> = le
        .coef
        .as_ref()
        .map(|c| c.iter().map(|&x| S::from_f64(x)).collect());

    match layer.aggregator() {
        Aggregator::Max => {
            let Messages::PerVertex(own) = messages else {
                return Err(EngnError::InvalidArgument(
                    "max aggregation expects per-vertex messages".into(),
                ));
            };
            let mut out = own.clone();
            for e in &le.edges {
                let src = own.row(e.src as usize).to_vec();
                for (o, s) in out.row_mut(e.dst as usize).iter_mut().zip(src) {
                    *o = o.max_of(s);
                }
            }
            Ok(out)
        }
        Aggregator::Sum | Aggregator::Mean => {
            let relations = if layer.kind() == ModelKind::Rgcn {
                layer.num_relations()
            } else {
                1
            };
            let mut out: Matrix<S> = Matrix::zeros(n, d * relations);
            for (k, e) in le.edges.iter().enumerate() {
                let base = if relations > 1 { e.relation_index() * d } else { 0 };
                let msg = messages.row(k, e);
                let dst = &mut out.row_mut(e.dst as usize)[base..base + d];
                match &coef {
                    Some(c) => {
                        for (o, &m) in dst.iter_mut().zip(msg) {
                            *o = *o + c[k] * m;
                        }
                    }
                    None => {
                        for (o, &m) in dst.iter_mut().zip(msg) {
                            *o = *o + m;
                        }
                    }
                }
            }
            if layer.aggregator() == Aggregator::Mean {
                for v in 0..n {
                    let deg = g.in_degree()[v] as usize;
                    for x in out.row_mut(v) {
                        *x = if deg == 0 { S::ZERO } else { x.div_count(deg) };
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Update stage: combines the aggregated features with the layer's own
/// properties; bias and activation are applied here.
pub fn update<S: Scalar>(
    layer: &LayerSpec,
    aggregated: &PropertyMatrix<S>,
    props: &PropertyMatrix<S>,
) -> Result<PropertyMatrix<S>> {
    if aggregated.rows() != props.rows() {
        return Err(EngnError::DimensionMismatch(format!(
            "aggregated features have {} rows, properties {}",
            aggregated.rows(),
            props.rows()
        )));
    }
    check_cols(props, layer.f(), "property matrix")?;
    let weights: WeightSet<S> = layer.weights().cast();
    let (f, h) = (layer.f(), layer.h());
    match &weights {
        WeightSet::Gcn { bias, .. } => {
            check_cols(aggregated, h, "aggregated features")?;
            let mut out = aggregated.clone();
            add_bias(&mut out, bias);
            Ok(out.map(S::relu))
        }
        WeightSet::GsPool { pool, w, bias, .. } => {
            check_cols(aggregated, pool.cols(), "aggregated features")?;
            let cat = Matrix::hconcat(&[aggregated.clone(), props.clone()])?;
            let mut out = cat.matmul(w)?;
            add_bias(&mut out, bias);
            Ok(out.map(S::relu))
        }
        WeightSet::Rgcn {
            relations,
            self_w,
            bias,
        } => {
            check_cols(aggregated, f * relations.len(), "aggregated features")?;
            let mut out = props.matmul(self_w)?;
            for (r, wr) in relations.iter().enumerate() {
                let part = aggregated.col_slice(r * f, (r + 1) * f).matmul(wr)?;
                for v in 0..out.rows() {
                    for (o, &p) in out.row_mut(v).iter_mut().zip(part.row(v)) {
                        *o = *o + p;
                    }
                }
            }
            add_bias(&mut out, bias);
            Ok(out.map(S::relu))
        }
        WeightSet::GatedGcn { w, bias, .. } => {
            check_cols(aggregated, f, "aggregated features")?;
            let mut out = aggregated.matmul(w)?;
            add_bias(&mut out, bias);
            Ok(out.map(S::relu))
        }
        WeightSet::Grn { w, state_proj, gru } => {
            check_cols(aggregated, f, "aggregated features")?;
            let x = aggregated.matmul(w)?;
            let state = match state_proj {
                Some(p) => props.matmul(p)?,
                None => props.clone(),
            };
            let mut out = Matrix::zeros(props.rows(), h);
            for v in 0..props.rows() {
                let next = super::gru_cell(state.row(v), x.row(v), gru)?;
                out.row_mut(v).copy_from_slice(&next);
            }
            Ok(out)
        }
    }
}

/// Runs one layer under the given stage order.
pub fn forward_layer<S: Scalar>(
    layer: &LayerSpec,
    props: &PropertyMatrix<S>,
    g: &Graph,
    order: StageOrder,
) -> Result<PropertyMatrix<S>> {
    validate_order(layer, order)?;
    match order {
        StageOrder::Fau => {
            let messages = feature_extraction(layer, props, g)?;
            let agg = aggregate(layer, &messages, g)?;
            update(layer, &agg, props)
        }
        StageOrder::Afu => {
            check_rows(props, g, "property matrix")?;
            check_cols(props, layer.f(), "property matrix")?;
            let agg = aggregate(layer, &Messages::PerVertex(props.clone()), g)?;
            let projected = feature_extraction(layer, &agg, g)?.into_matrix();
            update(layer, &projected, props)
        }
    }
}
