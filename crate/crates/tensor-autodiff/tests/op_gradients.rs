//! Central-difference checks for every differentiable op, plus structural
//! backward properties (linearity, attention gradients).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensor_autodiff::{bind, grad_check, mhsa, AdError, Graph, NodeId, Params, Tensor};

const H: f64 = 1e-5;
const TOL: f64 = 1e-5;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tensor with entries bounded away from zero so |x|, relu and
/// division probes stay off their kinks/poles.
fn offset_randn(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    let mut t = Tensor::randn(rows, cols, 1.0, rng);
    for v in t.data_mut() {
        if v.abs() < 0.15 {
            *v = 0.15 * v.signum() + *v;
        }
    }
    t
}

fn check(name: &str, inputs: &[Tensor], build: impl Fn(&mut Graph, &[NodeId]) -> Result<NodeId, AdError>) {
    let report = grad_check(build, inputs, H).unwrap();
    assert!(
        report.max_rel_err < TOL,
        "{name}: rel err {} over {} elements ({} excluded)",
        report.max_rel_err,
        report.checked,
        report.excluded
    );
    assert!(report.checked > 0, "{name}: nothing checked");
}

#[test]
fn elementwise_ops() {
    let mut r = rng(100);
    let a = offset_randn(3, 4, &mut r);
    let b = offset_randn(3, 4, &mut r);

    check("add", &[a.clone(), b.clone()], |g, ids| {
        let s = g.add(ids[0], ids[1])?;
        Ok(g.sum_all(s))
    });
    check("sub", &[a.clone(), b.clone()], |g, ids| {
        let s = g.sub(ids[0], ids[1])?;
        Ok(g.mean_all(s))
    });
    check("mul", &[a.clone(), b.clone()], |g, ids| {
        let s = g.mul(ids[0], ids[1])?;
        Ok(g.sum_all(s))
    });
    check("div", &[a.clone(), b.clone()], |g, ids| {
        let s = g.div(ids[0], ids[1])?;
        Ok(g.sum_all(s))
    });
    check("neg_scale_addscalar", &[a.clone()], |g, ids| {
        let n = g.neg(ids[0]);
        let s = g.scale(n, 2.5);
        let s = g.add_scalar(s, 1.0);
        Ok(g.sum_all(s))
    });
    check("relu", &[a.clone()], |g, ids| {
        let s = g.relu(ids[0]);
        Ok(g.sum_all(s))
    });
    check("silu", &[a.clone()], |g, ids| {
        let s = g.silu(ids[0]);
        Ok(g.sum_all(s))
    });
    check("abs", &[a.clone()], |g, ids| {
        let s = g.abs(ids[0]);
        Ok(g.sum_all(s))
    });
    check("exp", &[a.clone()], |g, ids| {
        let s = g.exp(ids[0]);
        Ok(g.sum_all(s))
    });
    check("sqrt", &[a.map(|v| v.abs() + 0.5)], |g, ids| {
        let s = g.sqrt(ids[0]);
        Ok(g.sum_all(s))
    });
    check("minimum", &[a.clone(), b.clone()], |g, ids| {
        let s = g.minimum(ids[0], ids[1])?;
        Ok(g.sum_all(s))
    });
    check("clamp", &[a.clone()], |g, ids| {
        let s = g.clamp(ids[0], -0.9, 0.9);
        Ok(g.sum_all(s))
    });
}

#[test]
fn matmul_and_shape_ops() {
    let mut r = rng(200);
    let a = Tensor::randn(2, 3, 1.0, &mut r);
    let b = Tensor::randn(3, 2, 1.0, &mut r);

    check("matmul", &[a.clone(), b.clone()], |g, ids| {
        let c = g.matmul(ids[0], ids[1])?;
        Ok(g.sum_all(c))
    });
    check("transpose", &[a.clone()], |g, ids| {
        let t = g.transpose(ids[0]);
        let c = g.mul(t, t)?;
        Ok(g.sum_all(c))
    });
    check("concat_slice", &[a.clone(), a.clone()], |g, ids| {
        let c = g.concat_cols(ids[0], ids[1])?;
        let r2 = g.concat_rows(c, c)?;
        let s = g.slice_cols(r2, 1, 3)?;
        let s = g.slice_rows(s, 1, 2)?;
        let sq = g.mul(s, s)?;
        Ok(g.sum_all(sq))
    });
    check("reshape_pad", &[a.clone()], |g, ids| {
        let p = g.pad_cols(ids[0], 1, 2);
        let f = g.reshape(p, 3, 4)?;
        let sq = g.mul(f, f)?;
        Ok(g.sum_all(sq))
    });
    check("repeat_rows", &[Tensor::randn(1, 4, 1.0, &mut r)], |g, ids| {
        let t = g.repeat_rows(ids[0], 5)?;
        let sq = g.mul(t, t)?;
        Ok(g.sum_all(sq))
    });
    check("gather_rows", &[Tensor::randn(4, 3, 1.0, &mut r)], |g, ids| {
        let t = g.gather_rows(ids[0], &[0, 2, 2, 3, 1])?;
        let sq = g.mul(t, t)?;
        Ok(g.sum_all(sq))
    });
}

#[test]
fn broadcast_and_reduction_ops() {
    let mut r = rng(300);
    let a = Tensor::randn(4, 3, 1.0, &mut r);
    let row = Tensor::randn(1, 3, 1.0, &mut r);
    let col = offset_randn(4, 1, &mut r);

    check("add_row", &[a.clone(), row.clone()], |g, ids| {
        let s = g.add_row(ids[0], ids[1])?;
        let sq = g.mul(s, s)?;
        Ok(g.sum_all(sq))
    });
    check("mul_row", &[a.clone(), row.clone()], |g, ids| {
        let s = g.mul_row(ids[0], ids[1])?;
        Ok(g.sum_all(s))
    });
    check("mul_col", &[a.clone(), col.clone()], |g, ids| {
        let s = g.mul_col(ids[0], ids[1])?;
        Ok(g.sum_all(s))
    });
    check("div_col", &[a.clone(), col.clone()], |g, ids| {
        let s = g.div_col(ids[0], ids[1])?;
        Ok(g.sum_all(s))
    });
    check("row_sums", &[a.clone()], |g, ids| {
        let s = g.row_sums(ids[0]);
        let sq = g.mul(s, s)?;
        Ok(g.sum_all(sq))
    });
    check("col_sums", &[a.clone()], |g, ids| {
        let s = g.col_sums(ids[0]);
        let sq = g.mul(s, s)?;
        Ok(g.sum_all(sq))
    });
    check("cumsum_rows", &[a.clone()], |g, ids| {
        let s = g.cumsum_rows(ids[0]);
        let sq = g.mul(s, s)?;
        Ok(g.sum_all(sq))
    });
    check("softmax_rows", &[a.clone()], |g, ids| {
        let s = g.softmax_rows(ids[0]);
        let w = g.cumsum_rows(s); // break symmetry so grads are nonzero
        let sq = g.mul(w, w)?;
        Ok(g.sum_all(sq))
    });
    check("layer_norm_rows", &[a.clone()], |g, ids| {
        let s = g.layer_norm_rows(ids[0], 1e-5);
        let c = g.cumsum_rows(s);
        let sq = g.mul(c, c)?;
        Ok(g.sum_all(sq))
    });
}

#[test]
fn softmax_rows_sum_to_one() {
    let mut r = rng(42);
    let a = Tensor::randn(6, 9, 3.0, &mut r);
    let mut g = Graph::new();
    let id = g.constant(a);
    let s = g.softmax_rows(id);
    let v = g.value(s);
    for i in 0..v.rows() {
        let sum: f64 = v.row(i).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}

#[test]
fn layer_norm_of_constant_rows_is_zero() {
    let a = Tensor::full(3, 5, 4.2);
    let mut g = Graph::new();
    let id = g.constant(a);
    let s = g.layer_norm_rows(id, 1e-5);
    assert!(g.value(s).max_abs() < 1e-9);
}

#[test]
fn backward_is_linear_in_the_loss() {
    // grad(l1 + l2) == grad(l1) + grad(l2)
    let mut r = rng(7);
    let x = Tensor::randn(3, 3, 1.0, &mut r);
    let grad_of = |which: u8| -> Tensor {
        let mut g = Graph::new();
        let id = g.leaf(x.clone());
        let sq = g.mul(id, id).unwrap();
        let l1 = g.sum_all(sq);
        let e = g.exp(id);
        let l2 = g.mean_all(e);
        let loss = match which {
            0 => l1,
            1 => l2,
            _ => g.add(l1, l2).unwrap(),
        };
        g.backward(loss).unwrap();
        g.grad(id).unwrap().clone()
    };
    let g1 = grad_of(0);
    let g2 = grad_of(1);
    let gsum = grad_of(2);
    for k in 0..x.len() {
        let lin = g1.data()[k] + g2.data()[k];
        assert!((gsum.data()[k] - lin).abs() < 1e-12);
    }
}

#[test]
fn mhsa_gradient_check_on_toy_input() {
    let mut r = rng(500);
    let n = 4;
    let d = 4;
    let heads = 2;
    let max_rel = 8;
    let mut params = Params::new();
    for name in ["att.wq", "att.wk", "att.wv", "att.wo"] {
        params.init_linear(name, d, d, &mut r);
    }
    let x = Tensor::randn(n, d, 1.0, &mut r);
    let rel = Tensor::randn(2 * max_rel + 1, d / heads, 0.5, &mut r);

    // Gradients with respect to the input, the relative table and one weight.
    let wq = params.get("att.wq.w").unwrap().clone();
    let inputs = vec![x, rel, wq];
    let report = grad_check(
        |g, ids| {
            let mut staged = Params::new();
            for (name, t) in params.iter() {
                if name != "att.wq.w" {
                    staged.insert(name.clone(), t.clone());
                }
            }
            let mut bound = bind(g, &staged);
            bound.insert("att.wq.w", ids[2]);
            let out = mhsa(g, ids[0], &bound, "att", heads, ids[1], max_rel)?;
            let sq = g.mul(out, out)?;
            Ok(g.sum_all(sq))
        },
        &inputs,
        1e-5,
    )
    .unwrap();
    assert!(
        report.max_rel_err < 1e-4,
        "mhsa rel err {}",
        report.max_rel_err
    );
}
