//! A small graph convolutional network: layers X_l = sigma(sum_k S^k X_{l-1} H_{lk})
//! with hand-written reverse-mode gradients, optional readout, and the usual
//! structural presets expressed as tying/zero masks on the tap matrices.

use ndarray::{Array1, Array2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GsoKind, ShiftOperator};
use crate::linalg;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn forward(&self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
            Activation::Identity => v,
        }
    }

    fn derivative(&self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Structural constraint on a layer's tap matrices, enforced at
/// initialization and after every gradient step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerConstraint {
    None,
    /// H_{lk} = 0 for the listed hop indices.
    ZeroTaps(Vec<usize>),
    /// H_{l0} = (1 + epsilon) H_{l1}; gradients of the tied block accumulate
    /// onto the free one.
    GinTie { epsilon: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    /// One F_in x F_out matrix per hop k = 0..=K.
    pub weights: Vec<Array2<f64>>,
    pub activation: Activation,
    pub constraint: LayerConstraint,
    /// Per-node feature normalization after the activation (GraphSAGE).
    pub normalize_output: bool,
}

impl Layer {
    pub fn order(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn in_features(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn out_features(&self) -> usize {
        self.weights[0].ncols()
    }

    fn apply_constraint(&mut self) {
        match &self.constraint {
            LayerConstraint::None => {}
            LayerConstraint::ZeroTaps(zeros) => {
                for &k in zeros {
                    if k < self.weights.len() {
                        self.weights[k].fill(0.0);
                    }
                }
            }
            LayerConstraint::GinTie { epsilon } => {
                if self.weights.len() >= 2 {
                    let tied = self.weights[1].mapv(|v| v * (1.0 + epsilon));
                    self.weights[0] = tied;
                }
            }
        }
    }

    fn project_gradients(&self, grads: &mut [Array2<f64>]) {
        match &self.constraint {
            LayerConstraint::None => {}
            LayerConstraint::ZeroTaps(zeros) => {
                for &k in zeros {
                    if k < grads.len() {
                        grads[k].fill(0.0);
                    }
                }
            }
            LayerConstraint::GinTie { epsilon } => {
                if grads.len() >= 2 {
                    let fold = grads[0].mapv(|v| v * (1.0 + epsilon));
                    grads[1] = &grads[1] + &fold;
                    grads[0].fill(0.0);
                }
            }
        }
    }

    /// Hop indices whose weights are free parameters under the constraint.
    fn free_taps(&self) -> Vec<usize> {
        match &self.constraint {
            LayerConstraint::None => (0..self.weights.len()).collect(),
            LayerConstraint::ZeroTaps(zeros) => (0..self.weights.len())
                .filter(|k| !zeros.contains(k))
                .collect(),
            LayerConstraint::GinTie { .. } => (1..self.weights.len()).collect(),
        }
    }
}

/// Decoder from the final layer features to the task output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Readout {
    /// Shared F_L x C map applied at every node (node-level tasks).
    PerNodeLinear(Array2<f64>),
    /// (N F_L) x C map over the concatenated features (graph-level tasks).
    ConcatLinear(Array2<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GnnModel {
    pub layers: Vec<Layer>,
    pub readout: Option<Readout>,
}

/// Model output: per-node features/scores or a graph-level vector.
#[derive(Debug, Clone)]
pub enum ModelOutput {
    Nodes(Array2<f64>),
    Graph(Array1<f64>),
}

impl ModelOutput {
    pub fn nodes(&self) -> Result<&Array2<f64>> {
        match self {
            ModelOutput::Nodes(m) => Ok(m),
            ModelOutput::Graph(_) => Err(Error::Unsupported(
                "model produces a graph-level output".into(),
            )),
        }
    }

    pub fn graph(&self) -> Result<&Array1<f64>> {
        match self {
            ModelOutput::Graph(v) => Ok(v),
            ModelOutput::Nodes(_) => Err(Error::Unsupported(
                "model produces per-node outputs".into(),
            )),
        }
    }
}

struct ForwardPass {
    /// Layer inputs X_0 .. X_{L-1}, then the final activation X_L.
    activations: Vec<Array2<f64>>,
    /// Per layer: shifted inputs S^k X_{l-1} for k = 0..=K.
    shifted: Vec<Vec<Array2<f64>>>,
    /// Per layer: pre-activation sums.
    preacts: Vec<Array2<f64>>,
    /// Per layer: per-node norms when the layer normalizes its output.
    norms: Vec<Option<Array1<f64>>>,
    output: ModelOutput,
}

impl GnnModel {
    /// Seeded random initialization with the given layer shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn init(
        feature_dims: &[usize],
        order: usize,
        activation: Activation,
        constraint: LayerConstraint,
        normalize_output: bool,
        readout: Option<Readout>,
        seed: u64,
    ) -> Result<GnnModel> {
        if feature_dims.len() < 2 {
            return Err(Error::InvalidParameter(
                "need at least input and output feature dims".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for w in feature_dims.windows(2) {
            let scale = 1.0 / ((w[0] * (order + 1)) as f64).sqrt();
            let weights = (0..=order)
                .map(|_| Array2::from_shape_fn((w[0], w[1]), |_| rng.gen_range(-scale..scale)))
                .collect();
            let mut layer = Layer {
                weights,
                activation,
                constraint: constraint.clone(),
                normalize_output,
            };
            layer.apply_constraint();
            layers.push(layer);
        }
        Ok(GnnModel { layers, readout })
    }

    pub fn validate(&self, n: usize, input_features: usize) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParameter("model has no layers".into()));
        }
        let mut f = input_features;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.in_features() != f {
                return Err(Error::DimensionMismatch {
                    expected: f,
                    got: layer.in_features(),
                });
            }
            for w in &layer.weights {
                if w.dim() != (layer.in_features(), layer.out_features()) {
                    return Err(Error::InvalidParameter(format!(
                        "layer {l} has inconsistent tap shapes"
                    )));
                }
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("layer {l} weights")));
                }
            }
            f = layer.out_features();
        }
        if let Some(Readout::PerNodeLinear(theta)) = &self.readout {
            if theta.nrows() != f {
                return Err(Error::DimensionMismatch {
                    expected: f,
                    got: theta.nrows(),
                });
            }
        }
        if let Some(Readout::ConcatLinear(theta)) = &self.readout {
            if theta.nrows() != n * f {
                return Err(Error::DimensionMismatch {
                    expected: n * f,
                    got: theta.nrows(),
                });
            }
        }
        Ok(())
    }

    fn forward_pass(&self, s: &CsrMatrix, x0: &Array2<f64>) -> Result<ForwardPass> {
        let mut activations = vec![x0.clone()];
        let mut shifted_all = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut norms = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = activations.last().unwrap();
            let mut shifted = Vec::with_capacity(layer.order() + 1);
            shifted.push(input.clone());
            for _ in 1..=layer.order() {
                let next = s.matmul(shifted.last().unwrap());
                shifted.push(next);
            }
            let mut pre: Array2<f64> = Array2::zeros((input.nrows(), layer.out_features()));
            for (k, w) in layer.weights.iter().enumerate() {
                pre = pre + shifted[k].dot(w);
            }
            if pre.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("activation input".into()));
            }
            let mut act = pre.mapv(|v| layer.activation.forward(v));
            let norm = if layer.normalize_output {
                let mut per_node = Array1::zeros(act.nrows());
                for (i, mut row) in act.rows_mut().into_iter().enumerate() {
                    let n = row.dot(&row).sqrt();
                    per_node[i] = n;
                    if n > 0.0 {
                        row.mapv_inplace(|v| v / n);
                    }
                }
                Some(per_node)
            } else {
                None
            };
            shifted_all.push(shifted);
            preacts.push(pre);
            norms.push(norm);
            activations.push(act);
        }
        let last = activations.last().unwrap();
        let output = match &self.readout {
            None => ModelOutput::Nodes(last.clone()),
            Some(Readout::PerNodeLinear(theta)) => ModelOutput::Nodes(last.dot(theta)),
            Some(Readout::ConcatLinear(theta)) => {
                let flat = flatten_features(last);
                ModelOutput::Graph(theta.t().dot(&flat))
            }
        };
        Ok(ForwardPass {
            activations,
            shifted: shifted_all,
            preacts,
            norms,
            output,
        })
    }

    /// Run the network on an N x F_0 feature matrix.
    pub fn forward(&self, s: &ShiftOperator, x0: &Array2<f64>) -> Result<ModelOutput> {
        self.validate(s.node_count(), x0.ncols())?;
        if x0.nrows() != s.node_count() {
            return Err(Error::DimensionMismatch {
                expected: s.node_count(),
                got: x0.nrows(),
            });
        }
        Ok(self.forward_pass(s.matrix(), x0)?.output)
    }

    /// Free parameters flattened in a fixed order (layers, then readout).
    pub fn flatten_parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for k in layer.free_taps() {
                out.extend(layer.weights[k].iter());
            }
        }
        match &self.readout {
            Some(Readout::PerNodeLinear(theta)) | Some(Readout::ConcatLinear(theta)) => {
                out.extend(theta.iter());
            }
            None => {}
        }
        out
    }

    /// Inverse of [`flatten_parameters`]; re-applies ties and masks.
    pub fn assign_parameters(&mut self, params: &[f64]) -> Result<()> {
        let mut cursor = 0;
        for layer in &mut self.layers {
            for k in layer.free_taps() {
                let len = layer.weights[k].len();
                if cursor + len > params.len() {
                    return Err(Error::InvalidParameter("parameter vector too short".into()));
                }
                for (slot, &v) in layer.weights[k].iter_mut().zip(&params[cursor..cursor + len]) {
                    *slot = v;
                }
                cursor += len;
            }
            layer.apply_constraint();
        }
        if let Some(Readout::PerNodeLinear(theta)) | Some(Readout::ConcatLinear(theta)) =
            &mut self.readout
        {
            let len = theta.len();
            if cursor + len > params.len() {
                return Err(Error::InvalidParameter("parameter vector too short".into()));
            }
            for (slot, &v) in theta.iter_mut().zip(&params[cursor..cursor + len]) {
                *slot = v;
            }
            cursor += len;
        }
        if cursor != params.len() {
            return Err(Error::InvalidParameter(format!(
                "parameter vector has {} extra entries",
                params.len() - cursor
            )));
        }
        Ok(())
    }
}

fn flatten_features(m: &Array2<f64>) -> Array1<f64> {
    // feature-major concatenation [x^1; x^2; ...]
    let (n, f) = m.dim();
    let mut out = Array1::zeros(n * f);
    for c in 0..f {
        for i in 0..n {
            out[c * n + i] = m[[i, c]];
        }
    }
    out
}

/// Training loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    /// Per-node softmax cross entropy over labeled nodes only.
    CrossEntropyMasked,
}

/// A supervised target for one sample.
#[derive(Debug, Clone)]
pub enum TrainTarget {
    /// Dense per-node target (mse with node outputs).
    Nodes(Array2<f64>),
    /// Graph-level target (mse with a concat readout).
    Graph(Array1<f64>),
    /// (node, class) labels for the masked cross entropy.
    Labels(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub step: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub loss_trace: Vec<f64>,
}

struct Gradients {
    layers: Vec<Vec<Array2<f64>>>,
    readout: Option<Array2<f64>>,
}

fn zero_gradients(model: &GnnModel) -> Gradients {
    Gradients {
        layers: model
            .layers
            .iter()
            .map(|l| l.weights.iter().map(|w| Array2::zeros(w.dim())).collect())
            .collect(),
        readout: match &model.readout {
            Some(Readout::PerNodeLinear(t)) | Some(Readout::ConcatLinear(t)) => {
                Some(Array2::zeros(t.dim()))
            }
            None => None,
        },
    }
}

/// Loss value and output gradient for one sample.
fn loss_and_output_grad(
    output: &ModelOutput,
    target: &TrainTarget,
    loss: Loss,
) -> Result<(f64, ModelOutput)> {
    match (loss, output, target) {
        (Loss::Mse, ModelOutput::Nodes(yhat), TrainTarget::Nodes(y)) => {
            if yhat.dim() != y.dim() {
                return Err(Error::DimensionMismatch {
                    expected: y.nrows(),
                    got: yhat.nrows(),
                });
            }
            let diff = yhat - y;
            let value = diff.iter().map(|v| v * v).sum();
            Ok((value, ModelOutput::Nodes(diff * 2.0)))
        }
        (Loss::Mse, ModelOutput::Graph(yhat), TrainTarget::Graph(y)) => {
            let diff = yhat - y;
            let value = diff.dot(&diff);
            Ok((value, ModelOutput::Graph(diff * 2.0)))
        }
        (Loss::CrossEntropyMasked, ModelOutput::Nodes(scores), TrainTarget::Labels(labels)) => {
            if labels.is_empty() {
                return Err(Error::InvalidParameter("no labeled nodes".into()));
            }
            let c = scores.ncols();
            let mut value = 0.0;
            let mut grad = Array2::zeros(scores.dim());
            let count = labels.len() as f64;
            for &(node, class) in labels {
                if class >= c || node >= scores.nrows() {
                    return Err(Error::InvalidParameter(format!(
                        "label ({node}, {class}) out of range"
                    )));
                }
                let row = scores.row(node);
                let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
                let total: f64 = exps.iter().sum();
                value -= ((exps[class] / total).ln()) / count;
                for j in 0..c {
                    let softmax = exps[j] / total;
                    grad[[node, j]] +=
                        (softmax - if j == class { 1.0 } else { 0.0 }) / count;
                }
            }
            Ok((value, ModelOutput::Nodes(grad)))
        }
        _ => Err(Error::InvalidParameter(
            "loss, output shape and target kind do not line up".into(),
        )),
    }
}

/// Backward pass for one sample; accumulates into `grads`.
fn backward(
    model: &GnnModel,
    s: &CsrMatrix,
    pass: &ForwardPass,
    output_grad: &ModelOutput,
    grads: &mut Gradients,
) -> Result<()> {
    let last = pass.activations.last().unwrap();
    // readout backward
    let mut gx: Array2<f64> = match (&model.readout, output_grad) {
        (None, ModelOutput::Nodes(g)) => g.clone(),
        (Some(Readout::PerNodeLinear(theta)), ModelOutput::Nodes(g)) => {
            if let Some(gt) = grads.readout.as_mut() {
                *gt = &*gt + &last.t().dot(g);
            }
            g.dot(&theta.t())
        }
        (Some(Readout::ConcatLinear(theta)), ModelOutput::Graph(g)) => {
            let flat = flatten_features(last);
            if let Some(gt) = grads.readout.as_mut() {
                for r in 0..theta.nrows() {
                    for c in 0..theta.ncols() {
                        gt[[r, c]] += flat[r] * g[c];
                    }
                }
            }
            let gflat = theta.dot(g);
            let (n, f) = last.dim();
            Array2::from_shape_fn((n, f), |(i, c)| gflat[c * n + i])
        }
        _ => {
            return Err(Error::InvalidParameter(
                "output gradient does not match the readout".into(),
            ))
        }
    };
    for (l, layer) in model.layers.iter().enumerate().rev() {
        // undo normalization
        if let Some(norms) = &pass.norms[l] {
            let normalized = &pass.activations[l + 1];
            let mut gpost = Array2::zeros(gx.dim());
            for i in 0..gx.nrows() {
                let n = norms[i];
                if n > 0.0 {
                    let xi = normalized.row(i);
                    let gi = gx.row(i);
                    let proj = gi.dot(&xi);
                    for c in 0..gx.ncols() {
                        gpost[[i, c]] = (gx[[i, c]] - proj * xi[c]) / n;
                    }
                } else {
                    for c in 0..gx.ncols() {
                        gpost[[i, c]] = gx[[i, c]];
                    }
                }
            }
            gx = gpost;
        }
        // activation derivative
        let mut gpre = gx.clone();
        gpre.zip_mut_with(&pass.preacts[l], |g, &p| *g *= layer.activation.derivative(p));
        // tap gradients: dH_k = (S^k X)^T Gpre
        for (k, shifted) in pass.shifted[l].iter().enumerate() {
            grads.layers[l][k] = &grads.layers[l][k] + &shifted.t().dot(&gpre);
        }
        // input gradient via Horner on S^T
        if l > 0 {
            let k_max = layer.order();
            let mut acc = gpre.dot(&layer.weights[k_max].t());
            for k in (0..k_max).rev() {
                acc = s.matmul_t(&acc) + gpre.dot(&layer.weights[k].t());
            }
            gx = acc;
        }
    }
    Ok(())
}

/// Full-batch gradient descent on the dataset. A non-finite loss aborts.
pub fn gnn_train(
    model: &mut GnnModel,
    s: &ShiftOperator,
    dataset: &[(Array2<f64>, TrainTarget)],
    loss: Loss,
    config: TrainConfig,
) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    model.validate(s.node_count(), dataset[0].0.ncols())?;
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (value, grads) = batch_loss_and_grads(model, s, dataset, loss)?;
        if !value.is_finite() {
            return Err(Error::NonFinite("training loss".into()));
        }
        loss_trace.push(value);
        if config.step != 0.0 {
            for (layer, layer_grads) in model.layers.iter_mut().zip(grads.layers.into_iter()) {
                let mut projected = layer_grads;
                layer.project_gradients(&mut projected);
                for (w, g) in layer.weights.iter_mut().zip(projected.iter()) {
                    *w = &*w - &(g * config.step);
                }
                layer.apply_constraint();
            }
            if let (Some(gt), Some(Readout::PerNodeLinear(t)) | Some(Readout::ConcatLinear(t))) =
                (grads.readout, model.readout.as_mut())
            {
                *t = &*t - &(&gt * config.step);
            }
        }
    }
    Ok(TrainOutcome { loss_trace })
}

/// One full-batch evaluation: total loss plus parameter gradients.
pub(crate) fn batch_loss_and_grads(
    model: &GnnModel,
    s: &ShiftOperator,
    dataset: &[(Array2<f64>, TrainTarget)],
    loss: Loss,
) -> Result<(f64, Gradients)> {
    let mut grads = zero_gradients(model);
    let mut total = 0.0;
    for (x, target) in dataset {
        let pass = model.forward_pass(s.matrix(), x)?;
        let (value, output_grad) = loss_and_output_grad(&pass.output, target, loss)?;
        total += value;
        backward(model, s.matrix(), &pass, &output_grad, &mut grads)?;
    }
    Ok((total, grads))
}

/// Total loss only (used by the finite-difference checks).
pub fn batch_loss(
    model: &GnnModel,
    s: &ShiftOperator,
    dataset: &[(Array2<f64>, TrainTarget)],
    loss: Loss,
) -> Result<f64> {
    let mut total = 0.0;
    for (x, target) in dataset {
        let pass = model.forward_pass(s.matrix(), x)?;
        let (value, _) = loss_and_output_grad(&pass.output, target, loss)?;
        total += value;
    }
    Ok(total)
}

/// Gradient of the batch loss with respect to the free parameters, flattened
/// consistently with [`GnnModel::flatten_parameters`].
pub fn flat_gradient(
    model: &GnnModel,
    s: &ShiftOperator,
    dataset: &[(Array2<f64>, TrainTarget)],
    loss: Loss,
) -> Result<(f64, Vec<f64>)> {
    let (value, grads) = batch_loss_and_grads(model, s, dataset, loss)?;
    let mut flat = Vec::new();
    for (layer, layer_grads) in model.layers.iter().zip(grads.layers.into_iter()) {
        let mut projected = layer_grads;
        layer.project_gradients(&mut projected);
        for k in layer.free_taps() {
            flat.extend(projected[k].iter());
        }
    }
    if let Some(gt) = grads.readout {
        flat.extend(gt.iter());
    }
    Ok((value, flat))
}

/// Named structural presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnnPreset {
    Gcn,
    Sgc,
    Gin,
    Graphsage,
}

/// Parse a preset by name.
pub fn gnn_preset(name: &str) -> Result<GnnPreset> {
    match name {
        "gcn" => Ok(GnnPreset::Gcn),
        "sgc" => Ok(GnnPreset::Sgc),
        "gin" => Ok(GnnPreset::Gin),
        "graphsage" => Ok(GnnPreset::Graphsage),
        other => Err(Error::InvalidParameter(format!("unknown preset `{other}`"))),
    }
}

impl GnnPreset {
    /// Per-layer tap order the preset assumes.
    pub fn order(&self, requested: usize) -> usize {
        match self {
            GnnPreset::Gcn | GnnPreset::Gin | GnnPreset::Graphsage => 1,
            GnnPreset::Sgc => requested,
        }
    }

    /// Tying / masking scheme.
    pub fn constraint(&self, order: usize, epsilon: f64) -> LayerConstraint {
        match self {
            GnnPreset::Gcn => LayerConstraint::ZeroTaps(vec![0]),
            GnnPreset::Sgc => LayerConstraint::ZeroTaps((0..order).collect()),
            GnnPreset::Gin => LayerConstraint::GinTie { epsilon },
            GnnPreset::Graphsage => LayerConstraint::None,
        }
    }

    pub fn normalize_output(&self) -> bool {
        matches!(self, GnnPreset::Graphsage)
    }

    /// The shift operator the preset runs on.
    pub fn shift(&self, graph: &Graph) -> Result<ShiftOperator> {
        match self {
            GnnPreset::Gcn | GnnPreset::Sgc | GnnPreset::Graphsage => {
                // D^{-1/2} (I + A) D^{-1/2} with the plain degree matrix
                let n = graph.node_count();
                let a = ShiftOperator::from_graph(graph, GsoKind::Adjacency)?;
                let degrees: Vec<f64> = (0..n).map(|i| graph.degree(i)).collect();
                if let Some(node) = degrees.iter().position(|&d| d <= 0.0) {
                    return Err(Error::ZeroDegree {
                        node,
                        context: "preset shift".into(),
                    });
                }
                let mut dense = a.to_dense();
                for i in 0..n {
                    dense[[i, i]] += 1.0;
                }
                for i in 0..n {
                    for j in 0..n {
                        dense[[i, j]] /= (degrees[i] * degrees[j]).sqrt();
                    }
                }
                ShiftOperator::custom(&dense)
            }
            GnnPreset::Gin => {
                // binary adjacency
                let rows: Vec<(usize, usize, f64)> = graph
                    .edges()
                    .iter()
                    .map(|&(s, d, _)| (s, d, 1.0))
                    .collect();
                let unweighted = Graph::from_edge_list_with_nodes(
                    &rows,
                    graph.node_count(),
                    graph.directed(),
                )?;
                ShiftOperator::from_graph(&unweighted, GsoKind::Adjacency)
            }
        }
    }
}

/// Flatten helper for targets built from per-node class labels.
pub fn one_hot(labels: &[(usize, usize)], n: usize, classes: usize) -> Array2<f64> {
    let mut m = Array2::zeros((n, classes));
    for &(node, class) in labels {
        m[[node, class]] = 1.0;
    }
    m
}

/// Average output over a feature axis used by simple graph-level baselines.
pub fn mean_feature(m: &Array2<f64>) -> Array1<f64> {
    m.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::{design_nonspectral, ConvFilter};
    use crate::graph::{path_graph, Graph};
    use rand::prelude::*;

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(p) {
                    rows.push((i, j, rng.gen_range(0.2..1.0)));
                }
            }
        }
        for i in 0..n - 1 {
            if !rows.iter().any(|&(a, b, _)| (a, b) == (i, i + 1)) {
                rows.push((i, i + 1, 1.0));
            }
        }
        Graph::from_edge_list_with_nodes(&rows, n, false).unwrap()
    }

    fn random_features(n: usize, f: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, f), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn single_linear_layer_equals_conv_filter() {
        let g = random_graph(9, 0.5, 1);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let taps = [0.4, -0.3, 0.2];
        let weights = taps
            .iter()
            .map(|&t| Array2::from_elem((1, 1), t))
            .collect::<Vec<_>>();
        let model = GnnModel {
            layers: vec![Layer {
                weights,
                activation: Activation::Identity,
                constraint: LayerConstraint::None,
                normalize_output: false,
            }],
            readout: None,
        };
        let x = random_features(9, 1, 2);
        let out = model.forward(&s, &x).unwrap();
        let via_filter = ConvFilter::from_taps(taps.to_vec())
            .unwrap()
            .apply(&s, &x.column(0).to_owned())
            .unwrap();
        let nodes = out.nodes().unwrap();
        for i in 0..9 {
            assert!((nodes[[i, 0]] - via_filter[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_weights_zero_output_after_relu() {
        let g = path_graph(5).unwrap();
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let model = GnnModel {
            layers: vec![Layer {
                weights: vec![Array2::zeros((2, 3)); 2],
                activation: Activation::Relu,
                constraint: LayerConstraint::None,
                normalize_output: false,
            }],
            readout: None,
        };
        let x = random_features(5, 2, 3);
        let out = model.forward(&s, &x).unwrap();
        assert!(out.nodes().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_is_permutation_equivariant() {
        let g = random_graph(11, 0.4, 4);
        let s = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let model = GnnModel::init(
            &[2, 4, 3],
            2,
            Activation::Tanh,
            LayerConstraint::None,
            false,
            None,
            5,
        )
        .unwrap();
        let x = random_features(11, 2, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut perm: Vec<usize> = (0..11).collect();
        perm.shuffle(&mut rng);
        let sp = s.permute(&perm).unwrap();
        let xp = {
            let mut m = Array2::zeros(x.dim());
            for (new, &old) in perm.iter().enumerate() {
                for c in 0..x.ncols() {
                    m[[new, c]] = x[[old, c]];
                }
            }
            m
        };
        let out = model.forward(&s, &x).unwrap();
        let out_p = model.forward(&sp, &xp).unwrap();
        let nodes = out.nodes().unwrap();
        let nodes_p = out_p.nodes().unwrap();
        let mut worst = 0.0f64;
        for (new, &old) in perm.iter().enumerate() {
            for c in 0..nodes.ncols() {
                worst = worst.max((nodes_p[[new, c]] - nodes[[old, c]]).abs());
            }
        }
        assert!(worst <= 1e-9, "equivariance defect {worst}");
    }

    #[test]
    fn gradients_match_central_differences() {
        let g = random_graph(6, 0.5, 8);
        let s = ShiftOperator::from_graph(&g, GsoKind::NormalizedLaplacian).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (constraint, normalize, readout, loss) in [
            (
                LayerConstraint::None,
                false,
                Some(Readout::PerNodeLinear(Array2::from_shape_fn((3, 2), |_| {
                    rng.gen_range(-0.5..0.5)
                }))),
                Loss::Mse,
            ),
            (
                LayerConstraint::GinTie { epsilon: 0.3 },
                false,
                None,
                Loss::Mse,
            ),
            (
                LayerConstraint::None,
                true,
                Some(Readout::PerNodeLinear(Array2::from_shape_fn((3, 2), |_| {
                    rng.gen_range(-0.5..0.5)
                }))),
                Loss::Mse,
            ),
        ] {
            let mut model = GnnModel::init(
                &[2, 3],
                1,
                Activation::Tanh,
                constraint.clone(),
                normalize,
                readout.clone(),
                10,
            )
            .unwrap();
            let x = random_features(6, 2, 11);
            let target_cols = match &readout {
                Some(Readout::PerNodeLinear(t)) => t.ncols(),
                _ => 3,
            };
            let target = TrainTarget::Nodes(random_features(6, target_cols, 12));
            let dataset = vec![(x, target)];
            let (_, analytic) = flat_gradient(&model, &s, &dataset, loss).unwrap();
            let params = model.flatten_parameters();
            let mut worst_rel = 0.0f64;
            let h = 1e-6;
            for p in 0..params.len() {
                let mut plus = params.clone();
                plus[p] += h;
                model.assign_parameters(&plus).unwrap();
                let fp = batch_loss(&model, &s, &dataset, loss).unwrap();
                let mut minus = params.clone();
                minus[p] -= h;
                model.assign_parameters(&minus).unwrap();
                let fm = batch_loss(&model, &s, &dataset, loss).unwrap();
                let numeric = (fp - fm) / (2.0 * h);
                let rel = (analytic[p] - numeric).abs() / numeric.abs().max(1e-6);
                worst_rel = worst_rel.max(rel);
            }
            model.assign_parameters(&params).unwrap();
            assert!(
                worst_rel <= 1e-5,
                "constraint {constraint:?} normalize {normalize}: rel {worst_rel}"
            );
        }
    }

    #[test]
    fn cross_entropy_gradcheck() {
        let g = random_graph(7, 0.5, 13);
        let s = ShiftOperator::from_graph(&g, GsoKind::NormalizedLaplacian).unwrap();
        let mut model = GnnModel::init(
            &[2, 3],
            1,
            Activation::Tanh,
            LayerConstraint::None,
            false,
            Some(Readout::PerNodeLinear(random_features(3, 3, 14))),
            15,
        )
        .unwrap();
        let x = random_features(7, 2, 16);
        let labels = vec![(0usize, 1usize), (3, 0), (5, 2)];
        let dataset = vec![(x, TrainTarget::Labels(labels))];
        let (_, analytic) = flat_gradient(&model, &s, &dataset, Loss::CrossEntropyMasked).unwrap();
        let params = model.flatten_parameters();
        let h = 1e-6;
        for p in (0..params.len()).step_by(3) {
            let mut plus = params.clone();
            plus[p] += h;
            model.assign_parameters(&plus).unwrap();
            let fp = batch_loss(&model, &s, &dataset, Loss::CrossEntropyMasked).unwrap();
            let mut minus = params.clone();
            minus[p] -= h;
            model.assign_parameters(&minus).unwrap();
            let fm = batch_loss(&model, &s, &dataset, Loss::CrossEntropyMasked).unwrap();
            let numeric = (fp - fm) / (2.0 * h);
            assert!(
                (analytic[p] - numeric).abs() <= 1e-5 * numeric.abs().max(1e-4),
                "param {p}: {} vs {numeric}",
                analytic[p]
            );
        }
        model.assign_parameters(&params).unwrap();
    }

    #[test]
    fn zero_step_keeps_parameters() {
        let g = random_graph(6, 0.5, 17);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let mut model = GnnModel::init(
            &[1, 2],
            1,
            Activation::Relu,
            LayerConstraint::None,
            false,
            None,
            18,
        )
        .unwrap();
        let before = model.flatten_parameters();
        let dataset = vec![(
            random_features(6, 1, 19),
            TrainTarget::Nodes(random_features(6, 2, 20)),
        )];
        gnn_train(
            &mut model,
            &s,
            &dataset,
            Loss::Mse,
            TrainConfig {
                step: 0.0,
                epochs: 5,
            },
        )
        .unwrap();
        assert_eq!(model.flatten_parameters(), before);
    }

    #[test]
    fn single_layer_training_reaches_least_squares_objective() {
        // dataset {(e_i, B e_i)}: the mse over canonical inputs equals the
        // Frobenius operator distance, whose optimum design_nonspectral gives
        let n = 8;
        let g = random_graph(n, 0.5, 21);
        let s = ShiftOperator::from_graph(&g, GsoKind::NormalizedAdjacency).unwrap();
        let truth = ConvFilter::from_taps(vec![0.5, -0.3, 0.15]).unwrap();
        let mut b = truth.dense_operator(&s).unwrap();
        // perturb so the optimum is not exactly representable
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for v in b.iter_mut() {
            *v += rng.gen_range(-0.05..0.05);
        }
        let dataset: Vec<(Array2<f64>, TrainTarget)> = (0..n)
            .map(|i| {
                let mut e = Array2::zeros((n, 1));
                e[[i, 0]] = 1.0;
                let mut target = Array2::zeros((n, 1));
                for r in 0..n {
                    target[[r, 0]] = b[[r, i]];
                }
                (e, TrainTarget::Nodes(target))
            })
            .collect();
        let mut model = GnnModel::init(
            &[1, 1],
            2,
            Activation::Identity,
            LayerConstraint::None,
            false,
            None,
            23,
        )
        .unwrap();
        let outcome = gnn_train(
            &mut model,
            &s,
            &dataset,
            Loss::Mse,
            TrainConfig {
                step: 0.02,
                epochs: 6000,
            },
        )
        .unwrap();
        let (_, ls_residual) = design_nonspectral(&b, &s, 2).unwrap();
        let optimal = ls_residual * ls_residual;
        let achieved = *outcome.loss_trace.last().unwrap();
        assert!(
            (achieved - optimal).abs() <= 1e-4 * optimal.max(1.0),
            "achieved {achieved} vs optimal {optimal}"
        );
        // loss decreased substantially
        assert!(achieved <= 0.9 * outcome.loss_trace[0]);
    }

    #[test]
    fn sgc_with_identity_activation_collapses_to_k_hop_filter() {
        let g = random_graph(8, 0.5, 24);
        let preset = gnn_preset("sgc").unwrap();
        let s = preset.shift(&g).unwrap();
        let k = 2;
        let mut model = GnnModel::init(
            &[1, 1, 1],
            k,
            Activation::Identity,
            preset.constraint(k, 0.0),
            false,
            None,
            25,
        )
        .unwrap();
        // set the two surviving taps explicitly
        let w1 = model.layers[0].weights[k][[0, 0]];
        let w2 = model.layers[1].weights[k][[0, 0]];
        let x = random_features(8, 1, 26);
        let out = model.forward(&s, &x).unwrap();
        // composition of two K-shift linear layers = single 2K-hop filter
        let mut taps = vec![0.0; 2 * k + 1];
        taps[2 * k] = w1 * w2;
        let filt = ConvFilter::from_taps(taps).unwrap();
        let want = filt.apply(&s, &x.column(0).to_owned()).unwrap();
        let nodes = out.nodes().unwrap();
        for i in 0..8 {
            assert!((nodes[[i, 0]] - want[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn gcn_preset_matches_printed_propagation() {
        let g = random_graph(7, 0.6, 27);
        let preset = gnn_preset("gcn").unwrap();
        let s = preset.shift(&g).unwrap();
        let model = GnnModel::init(
            &[2, 3],
            1,
            Activation::Identity,
            preset.constraint(1, 0.0),
            false,
            None,
            28,
        )
        .unwrap();
        // H_{l0} is masked to zero, so the layer is S X H_1 with the
        // normalized I + A propagation matrix
        let x = random_features(7, 2, 29);
        let out = model.forward(&s, &x).unwrap();
        let want = s.to_dense().dot(&x).dot(&model.layers[0].weights[1]);
        let nodes = out.nodes().unwrap();
        for i in 0..7 {
            for c in 0..3 {
                assert!((nodes[[i, c]] - want[[i, c]]).abs() <= 1e-12);
            }
        }
        assert!(model.layers[0].weights[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gin_tie_receives_summed_gradient() {
        let g = random_graph(6, 0.5, 30);
        let preset = gnn_preset("gin").unwrap();
        let s = preset.shift(&g).unwrap();
        let mut model = GnnModel::init(
            &[1, 1],
            1,
            Activation::Identity,
            preset.constraint(1, 0.0),
            false,
            None,
            31,
        )
        .unwrap();
        // epsilon = 0: H_0 = H_1 exactly
        assert_eq!(
            model.layers[0].weights[0][[0, 0]],
            model.layers[0].weights[1][[0, 0]]
        );
        let x = random_features(6, 1, 32);
        let target = TrainTarget::Nodes(random_features(6, 1, 33));
        let dataset = vec![(x, target)];
        let (_, flat) = flat_gradient(&model, &s, &dataset, Loss::Mse).unwrap();
        // single free parameter; finite differences on it must match the
        // summed gradient of both (tied) taps
        let params = model.flatten_parameters();
        assert_eq!(params.len(), 1);
        let h = 1e-6;
        let mut plus = params.clone();
        plus[0] += h;
        model.assign_parameters(&plus).unwrap();
        let fp = batch_loss(&model, &s, &dataset, Loss::Mse).unwrap();
        let mut minus = params.clone();
        minus[0] -= h;
        model.assign_parameters(&minus).unwrap();
        let fm = batch_loss(&model, &s, &dataset, Loss::Mse).unwrap();
        let numeric = (fp - fm) / (2.0 * h);
        assert!(
            (flat[0] - numeric).abs() <= 1e-6 * numeric.abs().max(1.0),
            "{} vs {numeric}",
            flat[0]
        );
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!(gnn_preset("transformer").is_err());
    }
}
