use ndarray::{s, Array2, Axis};

use super::graph::GnnGraph;
use super::lstm::sigmoid;
use super::params::ModelParams;

/// Activations of one state transition.
#[derive(Clone, Debug)]
pub struct GrnStep {
    /// Summed child messages `[h_j; e_l]`, `N x (d_h + d_l)`.
    pub m_up: Array2<f64>,
    /// Summed parent messages `[h_k; e_l_rev]`.
    pub m_down: Array2<f64>,
    /// Activated gates `i, o, f, u` stacked column-wise, `N x 4 d_h`.
    pub gates: Array2<f64>,
    pub cells: Array2<f64>,
    pub states: Array2<f64>,
}

#[derive(Clone, Debug)]
pub struct GrnTrace {
    /// `h^(0) .. h^(T)`.
    pub states: Vec<Array2<f64>>,
    /// `c^(0) .. c^(T)`; `c^(0)` is zero.
    pub cells: Vec<Array2<f64>>,
    pub steps: Vec<GrnStep>,
}

impl GrnTrace {
    pub fn output(&self) -> &Array2<f64> {
        self.states.last().expect("at least the initial states")
    }
}

fn edge_weight(prob: f64, weighted: bool) -> f64 {
    if weighted {
        prob
    } else {
        1.0
    }
}

/// Sum incoming child messages and parent messages for every word.
///
/// Unweighted sums scale each term by exactly 1.0, so a weighted pass with
/// all probabilities equal to 1 performs the same floating-point operations.
pub fn compute_messages(
    states: &Array2<f64>,
    graph: &GnnGraph,
    label_emb: &Array2<f64>,
    weighted: bool,
) -> (Array2<f64>, Array2<f64>) {
    let (n, d_h) = states.dim();
    let d_l = label_emb.ncols();
    let num_labels = label_emb.nrows() / 2;
    let mut m_up = Array2::zeros((n, d_h + d_l));
    let mut m_down = Array2::zeros((n, d_h + d_l));
    for i in 0..n {
        let mut row = m_up.row_mut(i);
        for e in graph.child_edges(i) {
            let w = edge_weight(e.prob, weighted);
            let h = states.row(e.modifier);
            let emb = label_emb.row(e.label.index());
            for k in 0..d_h {
                row[k] += w * h[k];
            }
            for k in 0..d_l {
                row[d_h + k] += w * emb[k];
            }
        }
        let mut row = m_down.row_mut(i);
        for e in graph.parent_edges(i) {
            let w = edge_weight(e.prob, weighted);
            let h = states.row(e.head);
            let emb = label_emb.row(e.label.index() + num_labels);
            for k in 0..d_h {
                row[k] += w * h[k];
            }
            for k in 0..d_l {
                row[d_h + k] += w * emb[k];
            }
        }
    }
    (m_up, m_down)
}

/// One gated transition from `c^(t-1)` and the step's messages.
pub fn grn_step(
    cells_prev: &Array2<f64>,
    m_up: Array2<f64>,
    m_down: Array2<f64>,
    params: &ModelParams,
) -> GrnStep {
    let (n, d_h) = cells_prev.dim();
    let pre = m_up.dot(&params.grn_w_up.t()) + m_down.dot(&params.grn_w_down.t()) + &params.grn_b;
    let mut gates = Array2::zeros((n, 4 * d_h));
    let mut cells = Array2::zeros((n, d_h));
    let mut states = Array2::zeros((n, d_h));
    for w in 0..n {
        for k in 0..d_h {
            let i = sigmoid(pre[[w, k]]);
            let o = sigmoid(pre[[w, d_h + k]]);
            let f = sigmoid(pre[[w, 2 * d_h + k]]);
            let u = pre[[w, 3 * d_h + k]].tanh();
            let c = f * cells_prev[[w, k]] + i * u;
            gates[[w, k]] = i;
            gates[[w, d_h + k]] = o;
            gates[[w, 2 * d_h + k]] = f;
            gates[[w, 3 * d_h + k]] = u;
            cells[[w, k]] = c;
            states[[w, k]] = o * c.tanh();
        }
    }
    GrnStep {
        m_up,
        m_down,
        gates,
        cells,
        states,
    }
}

/// `steps` rounds of message passing starting from `h0` and zero cells.
pub fn grn_forward(
    h0: &Array2<f64>,
    graph: &GnnGraph,
    params: &ModelParams,
    steps: usize,
    weighted: bool,
) -> GrnTrace {
    let mut trace = GrnTrace {
        states: vec![h0.clone()],
        cells: vec![Array2::zeros(h0.dim())],
        steps: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        let prev = trace.states.last().expect("non-empty");
        let (m_up, m_down) = compute_messages(prev, graph, &params.label_emb, weighted);
        let step = grn_step(trace.cells.last().expect("non-empty"), m_up, m_down, params);
        trace.states.push(step.states.clone());
        trace.cells.push(step.cells.clone());
        trace.steps.push(step);
    }
    trace
}

/// Gradient w.r.t. `h^(0)` given the gradient w.r.t. `h^(T)`.
pub(crate) fn grn_backward(
    trace: &GrnTrace,
    graph: &GnnGraph,
    params: &ModelParams,
    weighted: bool,
    d_final: Array2<f64>,
    grads: &mut ModelParams,
) -> Array2<f64> {
    let (n, d_h) = d_final.dim();
    let d_l = params.label_emb.ncols();
    let num_labels = params.label_emb.nrows() / 2;
    let mut dh = d_final;
    let mut dc_next = Array2::<f64>::zeros((n, d_h));
    for t in (0..trace.steps.len()).rev() {
        let step = &trace.steps[t];
        let c_prev = &trace.cells[t];
        let mut d_pre = Array2::zeros((n, 4 * d_h));
        for w in 0..n {
            for k in 0..d_h {
                let i = step.gates[[w, k]];
                let o = step.gates[[w, d_h + k]];
                let f = step.gates[[w, 2 * d_h + k]];
                let u = step.gates[[w, 3 * d_h + k]];
                let tc = step.cells[[w, k]].tanh();
                let dc = dc_next[[w, k]] + dh[[w, k]] * o * (1.0 - tc * tc);
                d_pre[[w, k]] = dc * u * i * (1.0 - i);
                d_pre[[w, d_h + k]] = dh[[w, k]] * tc * o * (1.0 - o);
                d_pre[[w, 2 * d_h + k]] = dc * c_prev[[w, k]] * f * (1.0 - f);
                d_pre[[w, 3 * d_h + k]] = dc * i * (1.0 - u * u);
                dc_next[[w, k]] = dc * f;
            }
        }
        grads.grn_w_up += &d_pre.t().dot(&step.m_up);
        grads.grn_w_down += &d_pre.t().dot(&step.m_down);
        grads.grn_b += &d_pre.sum_axis(Axis(0));
        let dm_up = d_pre.dot(&params.grn_w_up);
        let dm_down = d_pre.dot(&params.grn_w_down);

        let mut dh_prev = Array2::zeros((n, d_h));
        for e in graph.edges() {
            let w = edge_weight(e.prob, weighted);
            let up = dm_up.row(e.head);
            let down = dm_down.row(e.modifier);
            {
                let mut target = dh_prev.row_mut(e.modifier);
                for k in 0..d_h {
                    target[k] += w * up[k];
                }
            }
            {
                let mut target = dh_prev.row_mut(e.head);
                for k in 0..d_h {
                    target[k] += w * down[k];
                }
            }
            let mut emb = grads.label_emb.row_mut(e.label.index());
            let up_label = up.slice(s![d_h..]);
            for k in 0..d_l {
                emb[k] += w * up_label[k];
            }
            let mut emb = grads.label_emb.row_mut(e.label.index() + num_labels);
            let down_label = down.slice(s![d_h..]);
            for k in 0..d_l {
                emb[k] += w * down_label[k];
            }
        }
        dh = dh_prev;
    }
    dh
}
