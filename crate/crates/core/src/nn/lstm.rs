use ndarray::{concatenate, s, Array1, Array2, ArrayView1, Axis};

use super::params::{LstmParams, ModelParams};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cached activations of one direction, in processing order.
#[derive(Clone, Debug)]
pub struct DirectionTrace {
    /// Sentence positions in the order they were consumed.
    pub order: Vec<usize>,
    /// `[x_t; h_{t-1}]` per step.
    pub inputs: Vec<Array1<f64>>,
    /// Gate activations `i, f, o, g` per step, stacked.
    pub gates: Vec<Array1<f64>>,
    pub cells: Vec<Array1<f64>>,
    pub states: Vec<Array1<f64>>,
}

#[derive(Clone, Debug)]
pub struct BiLstmTrace {
    pub leftward: DirectionTrace,
    pub rightward: DirectionTrace,
    /// `N x 2 d_r`; row `i` is `[leftward_i; rightward_i]`.
    pub output: Array2<f64>,
}

fn run_direction(p: &LstmParams, xs: &Array2<f64>, order: Vec<usize>) -> DirectionTrace {
    let hd = p.hidden();
    let mut h = Array1::zeros(hd);
    let mut c = Array1::<f64>::zeros(hd);
    let mut trace = DirectionTrace {
        order,
        inputs: Vec::new(),
        gates: Vec::new(),
        cells: Vec::new(),
        states: Vec::new(),
    };
    for &pos in &trace.order {
        let input = concatenate![Axis(0), xs.row(pos), h.view()];
        let z = p.w.dot(&input) + &p.b;
        let mut gates = Array1::zeros(4 * hd);
        for k in 0..4 * hd {
            gates[k] = if k < 3 * hd {
                sigmoid(z[k])
            } else {
                z[k].tanh()
            };
        }
        let (i, f, o, g) = split4(gates.view(), hd);
        c = &f * &c + &i * &g;
        h = &o * &c.mapv(f64::tanh);
        trace.inputs.push(input);
        trace.gates.push(gates);
        trace.cells.push(c.clone());
        trace.states.push(h.clone());
    }
    trace
}

fn split4(
    v: ArrayView1<'_, f64>,
    hd: usize,
) -> (
    ArrayView1<'_, f64>,
    ArrayView1<'_, f64>,
    ArrayView1<'_, f64>,
    ArrayView1<'_, f64>,
) {
    (
        v.slice_move(s![0..hd]),
        v.slice_move(s![hd..2 * hd]),
        v.slice_move(s![2 * hd..3 * hd]),
        v.slice_move(s![3 * hd..4 * hd]),
    )
}

/// Run both directions over `xs` (`N x d_w`) from zero initial states.
pub fn bilstm_forward(params: &ModelParams, xs: &Array2<f64>) -> BiLstmTrace {
    let n = xs.nrows();
    let leftward = run_direction(&params.lstm_leftward, xs, (0..n).rev().collect());
    let rightward = run_direction(&params.lstm_rightward, xs, (0..n).collect());
    let hd = params.lstm_leftward.hidden();
    let mut output = Array2::zeros((n, 2 * hd));
    for (step, &pos) in leftward.order.iter().enumerate() {
        output
            .slice_mut(s![pos, 0..hd])
            .assign(&leftward.states[step]);
    }
    for (step, &pos) in rightward.order.iter().enumerate() {
        output
            .slice_mut(s![pos, hd..])
            .assign(&rightward.states[step]);
    }
    BiLstmTrace {
        leftward,
        rightward,
        output,
    }
}

/// Backpropagate `d_out` (gradient w.r.t. this direction's per-position
/// states) through time. Accumulates parameter gradients into `grad` and
/// input gradients into `d_xs`.
fn backward_direction(
    p: &LstmParams,
    trace: &DirectionTrace,
    d_out: ndarray::ArrayView2<'_, f64>,
    grad: &mut LstmParams,
    d_xs: &mut Array2<f64>,
) {
    let hd = p.hidden();
    let d_in = p.w.ncols() - hd;
    let mut dh_next = Array1::<f64>::zeros(hd);
    let mut dc_next = Array1::<f64>::zeros(hd);
    for step in (0..trace.order.len()).rev() {
        let pos = trace.order[step];
        let (i, f, o, g) = split4(trace.gates[step].view(), hd);
        let c = &trace.cells[step];
        let c_prev = if step > 0 {
            trace.cells[step - 1].clone()
        } else {
            Array1::zeros(hd)
        };
        let dh = &d_out.row(pos) + &dh_next;
        let tc = c.mapv(f64::tanh);
        let dc = &dc_next + &(&dh * &o * &tc.mapv(|t| 1.0 - t * t));
        let mut dz = Array1::zeros(4 * hd);
        for k in 0..hd {
            dz[k] = dc[k] * g[k] * i[k] * (1.0 - i[k]);
            dz[hd + k] = dc[k] * c_prev[k] * f[k] * (1.0 - f[k]);
            dz[2 * hd + k] = dh[k] * tc[k] * o[k] * (1.0 - o[k]);
            dz[3 * hd + k] = dc[k] * i[k] * (1.0 - g[k] * g[k]);
        }
        dc_next = &dc * &f;
        let input = &trace.inputs[step];
        grad.w += &outer(&dz, input);
        grad.b += &dz;
        let d_input = p.w.t().dot(&dz);
        let mut row = d_xs.row_mut(pos);
        row += &d_input.slice(s![0..d_in]);
        dh_next = d_input.slice(s![d_in..]).to_owned();
    }
}

pub(crate) fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let col = a.view().insert_axis(Axis(1));
    let row = b.view().insert_axis(Axis(0));
    col.dot(&row)
}

/// Gradient w.r.t. the LSTM inputs given `d_output` (`N x 2 d_r`).
pub(crate) fn bilstm_backward(
    params: &ModelParams,
    trace: &BiLstmTrace,
    d_output: &Array2<f64>,
    grads: &mut ModelParams,
) -> Array2<f64> {
    let hd = params.lstm_leftward.hidden();
    let n = d_output.nrows();
    let d_in = params.lstm_leftward.w.ncols() - hd;
    let mut d_xs = Array2::zeros((n, d_in));
    backward_direction(
        &params.lstm_leftward,
        &trace.leftward,
        d_output.slice(s![.., 0..hd]),
        &mut grads.lstm_leftward,
        &mut d_xs,
    );
    backward_direction(
        &params.lstm_rightward,
        &trace.rightward,
        d_output.slice(s![.., hd..]),
        &mut grads.lstm_rightward,
        &mut d_xs,
    );
    d_xs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::config::ModelConfig;
    use crate::nn::params::ParamShapes;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(word_dim: usize, lstm_dim: usize) -> ModelParams {
        let config = ModelConfig {
            word_dim,
            label_dim: 1,
            lstm_dim,
            ..ModelConfig::default()
        };
        let shapes = ParamShapes {
            vocab_size: 4,
            num_label_ids: 2,
            num_relations: 2,
            num_tags: 1,
        };
        let mut p = ModelParams::init(&config, &shapes, &mut ChaCha8Rng::seed_from_u64(3));
        p.lstm_leftward.b.mapv_inplace(|_| 0.1);
        p.lstm_rightward.b.mapv_inplace(|_| -0.2);
        p
    }

    #[test]
    fn zero_parameters_give_zero_states() {
        let config = ModelConfig {
            word_dim: 3,
            lstm_dim: 2,
            ..ModelConfig::default()
        };
        let shapes = ParamShapes {
            vocab_size: 2,
            num_label_ids: 2,
            num_relations: 2,
            num_tags: 1,
        };
        let p = ModelParams::zeros(&config, &shapes);
        let xs = Array2::from_shape_fn((4, 3), |(i, j)| (i + j) as f64);
        assert!(bilstm_forward(&p, &xs).output.iter().all(|&v| v == 0.0));
    }

    // Scalar-by-scalar LSTM recurrence with explicit loops.
    fn scalar_lstm(w: &Array2<f64>, b: &Array1<f64>, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let hd = b.len() / 4;
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        let mut out = Vec::new();
        for x in xs {
            let input: Vec<f64> = x.iter().chain(h.iter()).copied().collect();
            let pre = |row: usize| {
                b[row]
                    + (0..input.len())
                        .map(|j| w[[row, j]] * input[j])
                        .sum::<f64>()
            };
            let mut new_h = vec![0.0; hd];
            for k in 0..hd {
                let i = 1.0 / (1.0 + (-pre(k)).exp());
                let f = 1.0 / (1.0 + (-pre(hd + k)).exp());
                let o = 1.0 / (1.0 + (-pre(2 * hd + k)).exp());
                let g = pre(3 * hd + k).tanh();
                c[k] = f * c[k] + i * g;
                new_h[k] = o * c[k].tanh();
            }
            h = new_h;
            out.push(h.clone());
        }
        out
    }

    #[test]
    fn matches_scalar_recurrence() {
        let p = setup(2, 2);
        let rows = vec![vec![0.3, -0.5], vec![1.0, 0.2], vec![-0.7, 0.9]];
        let xs = Array2::from_shape_fn((3, 2), |(i, j)| rows[i][j]);
        let out = bilstm_forward(&p, &xs).output;

        let right = scalar_lstm(&p.lstm_rightward.w, &p.lstm_rightward.b, &rows);
        let reversed: Vec<Vec<f64>> = rows.iter().rev().cloned().collect();
        let mut left = scalar_lstm(&p.lstm_leftward.w, &p.lstm_leftward.b, &reversed);
        left.reverse();
        for i in 0..3 {
            for k in 0..2 {
                assert!((out[[i, k]] - left[i][k]).abs() < 1e-12);
                assert!((out[[i, 2 + k]] - right[i][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reversal_swaps_directions() {
        let p = setup(3, 2);
        let mut swapped = p.clone();
        std::mem::swap(&mut swapped.lstm_leftward, &mut swapped.lstm_rightward);
        let xs = Array2::from_shape_fn((4, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin());
        let mut rev = xs.clone();
        rev.invert_axis(Axis(0));
        let a = bilstm_forward(&p, &xs).output;
        let b = bilstm_forward(&swapped, &rev).output;
        for i in 0..4 {
            for k in 0..2 {
                assert_eq!(b[[3 - i, 2 + k]], a[[i, k]]);
                assert_eq!(b[[3 - i, k]], a[[i, 2 + k]]);
            }
        }
    }
}
