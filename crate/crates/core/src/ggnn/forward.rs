use super::{GgnnParams, ReadoutMode};
use crate::error::{Error, Result};
use crate::instance_graph::EncodedGraph;
use crate::numerics::{dot, gemv_acc, gemv_t_acc, sigmoid, Matrix};

/// Node states for `t = 0..=T` plus the per-step intermediates needed by
/// backpropagation.
#[derive(Debug, Clone)]
pub struct NodeStates {
    /// `h[t]` is `|V|×D`; `h[0]` equals the annotation matrix.
    pub h: Vec<Matrix>,
    /// `m[t]` is the summed message feeding the update from `h[t]` to `h[t+1]`.
    pub m: Vec<Matrix>,
    pub(crate) z: Vec<Matrix>,
    pub(crate) r: Vec<Matrix>,
    pub(crate) candidate: Vec<Matrix>,
}

impl NodeStates {
    pub fn final_state(&self) -> &Matrix {
        self.h.last().expect("h[0] always present")
    }
}

#[derive(Debug, Clone)]
pub struct ForwardResult {
    pub prediction: f64,
    /// Attention gate `r_v` per node position.
    pub node_relevance: Vec<f64>,
    pub(crate) node_values: Vec<f64>,
    /// Readout sum before the final squashing.
    pub(crate) pooled: f64,
}

/// Runs the `T` message-passing steps.
pub fn propagate(g: &EncodedGraph, p: &GgnnParams) -> Result<NodeStates> {
    let d = p.hidden_dim;
    if g.hidden_dim() != d {
        return Err(Error::Dimension(format!(
            "graph encoded with dimension {}, model uses {d}",
            g.hidden_dim()
        )));
    }
    let n = g.num_nodes();
    let mut states = NodeStates {
        h: vec![g.annotations.clone()],
        m: Vec::with_capacity(p.steps),
        z: Vec::with_capacity(p.steps),
        r: Vec::with_capacity(p.steps),
        candidate: Vec::with_capacity(p.steps),
    };
    let mut rh = vec![0.0; d];
    for _ in 0..p.steps {
        let h = states.h.last().unwrap();
        let mut m = Matrix::zeros(n, d);
        for &(recv, send, ch) in &g.messages {
            let row = m.row_mut(recv);
            gemv_acc(&p.edge_weights[ch], h.row(send), row);
            for (x, b) in row.iter_mut().zip(p.edge_biases[ch].as_slice()) {
                *x += b;
            }
        }

        let mut z = Matrix::zeros(n, d);
        let mut r = Matrix::zeros(n, d);
        let mut cand = Matrix::zeros(n, d);
        let mut next = Matrix::zeros(n, d);
        for v in 0..n {
            let (mv, hv) = (m.row(v), h.row(v));

            let zv = z.row_mut(v);
            zv.copy_from_slice(p.b_z.as_slice());
            gemv_t_acc(&p.w_z, mv, zv);
            gemv_acc(&p.u_z, hv, zv);
            zv.iter_mut().for_each(|x| *x = sigmoid(*x));

            let rv = r.row_mut(v);
            rv.copy_from_slice(p.b_r.as_slice());
            gemv_t_acc(&p.w_r, mv, rv);
            gemv_acc(&p.u_r, hv, rv);
            rv.iter_mut().for_each(|x| *x = sigmoid(*x));

            for ((o, a), b) in rh.iter_mut().zip(r.row(v)).zip(hv) {
                *o = a * b;
            }
            let cv = cand.row_mut(v);
            cv.copy_from_slice(p.b_h.as_slice());
            gemv_t_acc(&p.w_h, mv, cv);
            gemv_t_acc(&p.u_h, &rh, cv);
            cv.iter_mut().for_each(|x| *x = x.tanh());

            let zv = z.row(v);
            let cv = cand.row(v);
            for (k, o) in next.row_mut(v).iter_mut().enumerate() {
                *o = zv[k] * hv[k] + (1.0 - zv[k]) * cv[k];
            }
        }
        states.m.push(m);
        states.z.push(z);
        states.r.push(r);
        states.candidate.push(cand);
        states.h.push(next);
    }
    Ok(states)
}

/// Gated attention readout over `[h_v^T; h_v^0]`.
pub fn readout(states: &NodeStates, g: &EncodedGraph, p: &GgnnParams) -> ForwardResult {
    let d = p.hidden_dim;
    let (att_final, att_init) = p.attention_w.as_slice().split_at(d);
    let (val_final, val_init) = p.value_w.as_slice().split_at(d);
    let last = states.final_state();
    let first = &states.h[0];
    let n = g.num_nodes();

    let mut node_relevance = Vec::with_capacity(n);
    let mut node_values = Vec::with_capacity(n);
    let mut pooled = 0.0;
    for v in 0..n {
        let (hl, h0) = (last.row(v), first.row(v));
        let gate = sigmoid(dot(att_final, hl) + dot(att_init, h0) + p.attention_b[(0, 0)]);
        let value = (dot(val_final, hl) + dot(val_init, h0) + p.value_b[(0, 0)]).tanh();
        pooled += gate * value;
        node_relevance.push(gate);
        node_values.push(value);
    }
    let graph_repr = match p.readout {
        ReadoutMode::Literal => pooled.tanh(),
        ReadoutMode::LinearOut => pooled,
    };
    ForwardResult {
        prediction: sigmoid(graph_repr),
        node_relevance,
        node_values,
        pooled,
    }
}

pub fn forward(g: &EncodedGraph, p: &GgnnParams) -> Result<(NodeStates, ForwardResult)> {
    let states = propagate(g, p)?;
    let result = readout(&states, g, p);
    if !result.prediction.is_finite() {
        return Err(Error::numeric("readout", "non-finite prediction"));
    }
    Ok((states, result))
}

/// Squared error of one prediction.
pub fn loss(prediction: f64, label: f64) -> f64 {
    (prediction - label).powi(2)
}
