//! Dense `f64` tensors, a reverse-mode operation tape and Adam.
//!
//! The primitive set is closed and has no broadcasting: bias terms are
//! written as `b · 1ᵀ` with a constant row of ones, masks are explicit.

mod adam;
pub mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, adam_step_filtered, AdamConfig, AdamState};
pub use params::{ParamId, ParamStore};
pub use tape::{Axis, Gradients, Primitive, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("dimension error in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("degenerate input to {op}: every position is masked")]
    Degenerate { op: &'static str },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("tape already consumed by a backward pass")]
    Replay,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn col(v: &[f64]) -> Tensor {
        Tensor::column(v.to_vec())
    }

    #[test]
    fn softmax_examples() {
        let mut tape = Tape::new();
        let x = tape.constant(col(&[1.0, 1.0, 1.0]));
        let y = tape.softmax_masked(x, &[true; 3]).unwrap();
        for &v in tape.value(y).data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let x = tape.constant(col(&[0.0, 2f64.ln()]));
        let y = tape.softmax_masked(x, &[true; 2]).unwrap();
        let d = tape.value(y).data();
        assert!((d[0] - 1.0 / 3.0).abs() < 1e-15 && (d[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_masked_positions_are_exactly_zero() {
        let mut store = ParamStore::new();
        let id = store.add("x", col(&[0.3, 5.0, -1.0, 2.0]));
        let mut tape = Tape::new();
        let x = tape.param(&store, id);
        let mask = [true, false, true, false];
        let y = tape.softmax_masked(x, &mask).unwrap();
        let v = tape.value(y).data().to_vec();
        assert_eq!(v[1], 0.0);
        assert_eq!(v[3], 0.0);
        assert!((v[0] + v[2] - 1.0).abs() < 1e-12);
        let w = tape.constant(col(&[1.0, 2.0, 3.0, 4.0]));
        let wy = tape.hadamard(y, w).unwrap();
        let root = tape.sum_all(wy);
        let g = tape.backward(root).unwrap();
        let g = g.get(id).unwrap();
        assert_eq!(g.data()[1], 0.0);
        assert_eq!(g.data()[3], 0.0);
    }

    #[test]
    fn fully_masked_reductions_are_degenerate() {
        let mut tape = Tape::new();
        let x = tape.constant(col(&[1.0, 2.0]));
        assert_eq!(
            tape.softmax_masked(x, &[false, false]),
            Err(KernelError::Degenerate { op: "softmax_masked" })
        );
        let m = tape.constant(Tensor::zeros(2, 3));
        assert!(matches!(tape.mean_masked(m, &[false; 3]), Err(KernelError::Degenerate { .. })));
        assert!(matches!(tape.max_masked(m, &[false; 3]), Err(KernelError::Degenerate { .. })));
    }

    #[test]
    fn identity_matmul_and_norm() {
        let mut tape = Tape::new();
        let a = Tensor::from_rows(&[vec![1.0, -2.0, 0.5], vec![4.0, 0.0, 3.0]]).unwrap();
        let i2 = tape.constant(Tensor::identity(2));
        let av = tape.constant(a.clone());
        let p = tape.matmul(i2, av).unwrap();
        assert_eq!(tape.value(p), &a);
        let v = tape.constant(col(&[3.0, 4.0]));
        let n = tape.l2_norm(v);
        assert_eq!(tape.value(n).item(), 5.0);
    }

    #[test]
    fn shape_mismatches_are_reported() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 3));
        assert!(matches!(tape.matmul(a, b), Err(KernelError::Shape { op: "matmul", .. })));
        let c = tape.constant(Tensor::zeros(3, 2));
        assert!(matches!(tape.add(a, c), Err(KernelError::Shape { .. })));
        assert!(matches!(tape.mean_masked(a, &[true; 2]), Err(KernelError::Shape { .. })));
    }

    #[test]
    fn mean_masked_matches_sum_over_valid() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_rows(&[vec![1.0, 2.0, 9.0], vec![-4.0, 0.5, 7.0]]).unwrap());
        let m = tape.mean_masked(x, &[true, true, false]).unwrap();
        assert_eq!(tape.value(m).data(), &[1.5, -1.75]);
        let all = tape.mean_masked(x, &[true; 3]).unwrap();
        assert_eq!(tape.value(all).data(), &[4.0, 3.5 / 3.0]);
    }

    #[test]
    fn norm_gradient_and_zero_mae() {
        let mut store = ParamStore::new();
        let p = store.add("p", col(&[3.0, 4.0]));
        let mut tape = Tape::new();
        let pv = tape.param(&store, p);
        let n = tape.l2_norm(pv);
        let g = tape.backward(n).unwrap();
        let g = g.get(p).unwrap().data();
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);

        let mut store = ParamStore::new();
        let x = store.add("x", col(&[1.0, -2.0]));
        let unused = store.add("unused", Tensor::filled(2, 2, 1.0));
        let mut tape = Tape::new();
        let xv = tape.param(&store, x);
        let xc = tape.constant(col(&[1.0, -2.0]));
        let l = tape.mae(xv, xc).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[0.0, 0.0]);
        assert_eq!(g.get_or_zeros(unused, &store), Tensor::zeros(2, 2));
    }

    #[test]
    fn backward_contract() {
        let mut tape = Tape::new();
        let v = tape.constant(col(&[1.0, 2.0]));
        assert!(matches!(tape.backward(v), Err(KernelError::Contract(_))));
        let mut tape = Tape::new();
        let v = tape.constant(Tensor::scalar(1.0));
        tape.backward(v).unwrap();
        assert_eq!(tape.backward(v).unwrap_err(), KernelError::Replay);
    }

    #[test]
    fn dispatch_matches_methods() {
        let mut tape = Tape::new();
        let x = tape.constant(col(&[0.5, -1.0, 2.0]));
        let a = tape.apply(Primitive::Tanh, &[x], None, 0.0).unwrap();
        let b = tape.tanh(x);
        assert_eq!(tape.value(a), tape.value(b));
        let s = tape.apply(Primitive::SoftmaxMasked, &[x], Some(&[true, false, true]), 0.0).unwrap();
        assert_eq!(tape.value(s).data()[1], 0.0);
        assert!(tape.apply(Primitive::Add, &[x], None, 0.0).is_err());
    }

    /// Random composite through every primitive, checked against central differences.
    fn composite(tape: &mut Tape, store: &ParamStore, ids: &[ParamId], mask: &[bool]) -> Var {
        let w1 = tape.param(store, ids[0]); // 3x4
        let x = tape.param(store, ids[1]); // 4x5
        let b = tape.param(store, ids[2]); // 3x1
        let ones = tape.constant(Tensor::filled(1, 5, 1.0));
        let h = tape.matmul(w1, x).unwrap();
        let bb = tape.matmul(b, ones).unwrap();
        let h = tape.add(h, bb).unwrap();
        let h = tape.tanh(h);
        let w2 = tape.param(store, ids[3]); // 3x5
        let h2 = tape.hadamard(h, w2).unwrap();
        let h2 = tape.relu(h2);
        let h2 = tape.add(h2, h).unwrap();
        let m = tape.mean_masked(h2, mask).unwrap(); // 3x1
        let mx = tape.max_masked(h, mask).unwrap(); // 3x1
        let ht = tape.transpose(h2); // 5x3
        let s = tape.sum_columns(ht); // 5x1
        let s = tape.scale(s, 0.7);
        let att = tape.softmax_masked(s, mask).unwrap(); // 5x1
        let f = tape.matmul(h2, att).unwrap(); // 3x1
        let cat = tape.concat(f, m, Axis::Rows).unwrap(); // 6x1
        let cat = tape.concat(cat, mx, Axis::Rows).unwrap(); // 9x1
        let side = tape.concat(h, h2, Axis::Cols).unwrap(); // 3x10
        let side_n = tape.l2_norm(side);
        let target = tape.constant(Tensor::column((0..9).map(|i| 0.1 * i as f64 - 0.3).collect()));
        let l = tape.mae(cat, target).unwrap();
        let n = tape.l2_norm(cat);
        let r = tape.add(l, n).unwrap();
        let side_n = tape.scale(side_n, 0.05);
        let r = tape.add(r, side_n).unwrap();
        let sel = tape.select_columns(x, &[1, 3, 1]).unwrap();
        let sel = tape.hadamard(sel, sel).unwrap();
        let sel = tape.sum_all(sel);
        let sel = tape.scale(sel, 0.3);
        tape.add(r, sel).unwrap()
    }

    #[test]
    fn select_columns_gathers_and_scatters() {
        let mut store = ParamStore::new();
        let id = store.add("t", Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap());
        let mut tape = Tape::new();
        let t = tape.param(&store, id);
        let s = tape.select_columns(t, &[2, 0, 2]).unwrap();
        assert_eq!(tape.value(s).data(), &[3.0, 1.0, 3.0, 6.0, 4.0, 6.0]);
        assert!(tape.select_columns(t, &[3]).is_err());
        let total = tape.sum_all(s);
        let g = tape.backward(total).unwrap();
        assert_eq!(g.get(id).unwrap().data(), &[1.0, 0.0, 2.0, 1.0, 0.0, 2.0]);
    }

    #[test]
    fn composite_gradients_match_finite_differences() {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rand_t = |r: usize, c: usize| {
                Tensor::new(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
            };
            let mut store = ParamStore::new();
            let ids = vec![
                store.add("w1", rand_t(3, 4)),
                store.add("x", rand_t(4, 5)),
                store.add("b", rand_t(3, 1)),
                store.add("w2", rand_t(3, 5)),
            ];
            let mask = [true, true, seed % 3 != 0, true, seed % 2 == 0];
            let report = gradcheck::check(&store, 1e-5, |tape, s| Ok::<_, KernelError>(composite(tape, s, &ids, &mask))).unwrap();
            assert!(report.max_rel_err < 1e-4, "seed {seed}: {report:?}");
        }
    }
}
