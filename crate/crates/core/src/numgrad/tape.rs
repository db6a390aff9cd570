//! Reverse-mode accumulation over a per-evaluation tape.
//!
//! Every forward op pushes a node holding its value and enough structure to
//! replay the chain rule in reverse. Batched inputs are rank-2 `[B, D]`;
//! likelihood ops reduce to per-sample vectors `[B]`.

use crate::tensor::{matmul, matmul_tn, Tensor};

use super::NumgradError;

pub type VarId = usize;

/// Clamp applied to Bernoulli probabilities before taking logs.
pub const EPS_P: f64 = 1e-5;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone)]
enum Expr {
    Leaf,
    /// x[B,k] @ w[n,k]^T
    MatMulNt { x: VarId, w: VarId },
    /// x[B,n] + b[n] broadcast over rows
    AddRow { x: VarId, b: VarId },
    Add(VarId, VarId),
    Sub(VarId, VarId),
    Mul(VarId, VarId),
    Scale(VarId, f64),
    OneMinus(VarId),
    Tanh(VarId),
    Sigmoid(VarId),
    /// softplus(x) + floor
    SoftplusFloor { x: VarId, floor: f64 },
    ConcatCols(VarId, VarId),
    /// x ⊙ c for a constant c (noise in the reparameterization)
    MulConst { x: VarId, c: Tensor },
    /// KL(N(mq,sq) || N(mp,sp)) per sample, summed over dims -> [B]
    GaussianKl {
        mq: VarId,
        sq: VarId,
        mp: VarId,
        sp: VarId,
    },
    /// -log Bernoulli(target; sigmoid(logits)) per sample -> [B]
    BernoulliNllLogits { logits: VarId, target: Tensor },
    /// max(x - free, 0) elementwise
    FreeNatsHinge { x: VarId, free: f64 },
    MeanAll(VarId),
    SumAll(VarId),
}

struct Node {
    value: Tensor,
    expr: Expr,
}

/// Computation tape. One per evaluation; not shared across threads.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: VarId) -> &Tensor {
        &self.nodes[id].value
    }

    fn push(&mut self, value: Tensor, expr: Expr) -> VarId {
        debug_assert!(value.all_finite(), "non-finite value on tape");
        self.nodes.push(Node { value, expr });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, value: Tensor) -> VarId {
        self.push(value, Expr::Leaf)
    }

    fn want_rank2(&self, id: VarId, ctx: &str) -> Result<(usize, usize), NumgradError> {
        let s = self.value(id).shape();
        if s.len() != 2 {
            return Err(NumgradError::Shape(format!(
                "{ctx}: expected rank-2 tensor, got shape {s:?}"
            )));
        }
        Ok((s[0], s[1]))
    }

    fn want_same_shape(&self, a: VarId, b: VarId, ctx: &str) -> Result<(), NumgradError> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(NumgradError::Shape(format!(
                "{ctx}: shapes {:?} and {:?} differ",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        Ok(())
    }

    /// x[B,k] @ w[n,k]^T -> [B,n]. Weights follow the [out, in] layout.
    pub fn matmul_nt(&mut self, x: VarId, w: VarId) -> Result<VarId, NumgradError> {
        let (_, k) = self.want_rank2(x, "matmul")?;
        let (_, k2) = self.want_rank2(w, "matmul weight")?;
        if k != k2 {
            return Err(NumgradError::Shape(format!(
                "matmul: input dim {k} does not match weight input dim {k2}"
            )));
        }
        let v = crate::tensor::matmul_nt(self.value(x), self.value(w));
        Ok(self.push(v, Expr::MatMulNt { x, w }))
    }

    pub fn add_row(&mut self, x: VarId, b: VarId) -> Result<VarId, NumgradError> {
        let (rows, n) = self.want_rank2(x, "add_row")?;
        let bs = self.value(b).shape();
        if bs != [n] {
            return Err(NumgradError::Shape(format!(
                "add_row: bias shape {bs:?} does not match row width {n}"
            )));
        }
        let xv = self.value(x);
        let bv = self.value(b);
        let mut out = xv.clone();
        for r in 0..rows {
            for c in 0..n {
                out.data_mut()[r * n + c] += bv.data()[c];
            }
        }
        Ok(self.push(out, Expr::AddRow { x, b }))
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> Result<VarId, NumgradError> {
        self.want_same_shape(a, b, "add")?;
        let v = Tensor::new(
            self.value(a).shape().to_vec(),
            self.value(a)
                .data()
                .iter()
                .zip(self.value(b).data())
                .map(|(x, y)| x + y)
                .collect(),
        )
        .unwrap();
        Ok(self.push(v, Expr::Add(a, b)))
    }

    pub fn sub(&mut self, a: VarId, b: VarId) -> Result<VarId, NumgradError> {
        self.want_same_shape(a, b, "sub")?;
        let v = Tensor::new(
            self.value(a).shape().to_vec(),
            self.value(a)
                .data()
                .iter()
                .zip(self.value(b).data())
                .map(|(x, y)| x - y)
                .collect(),
        )
        .unwrap();
        Ok(self.push(v, Expr::Sub(a, b)))
    }

    pub fn mul(&mut self, a: VarId, b: VarId) -> Result<VarId, NumgradError> {
        self.want_same_shape(a, b, "mul")?;
        let v = Tensor::new(
            self.value(a).shape().to_vec(),
            self.value(a)
                .data()
                .iter()
                .zip(self.value(b).data())
                .map(|(x, y)| x * y)
                .collect(),
        )
        .unwrap();
        Ok(self.push(v, Expr::Mul(a, b)))
    }

    pub fn scale(&mut self, x: VarId, c: f64) -> VarId {
        let v = self.value(x).map(|v| v * c);
        self.push(v, Expr::Scale(x, c))
    }

    pub fn one_minus(&mut self, x: VarId) -> VarId {
        let v = self.value(x).map(|v| 1.0 - v);
        self.push(v, Expr::OneMinus(x))
    }

    pub fn tanh(&mut self, x: VarId) -> VarId {
        let v = self.value(x).map(f64::tanh);
        self.push(v, Expr::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: VarId) -> VarId {
        let v = self.value(x).map(sigmoid);
        self.push(v, Expr::Sigmoid(x))
    }

    pub fn softplus_floor(&mut self, x: VarId, floor: f64) -> VarId {
        let v = self.value(x).map(|v| softplus(v) + floor);
        self.push(v, Expr::SoftplusFloor { x, floor })
    }

    pub fn concat_cols(&mut self, a: VarId, b: VarId) -> Result<VarId, NumgradError> {
        let (ra, ca) = self.want_rank2(a, "concat")?;
        let (rb, cb) = self.want_rank2(b, "concat")?;
        if ra != rb {
            return Err(NumgradError::Shape(format!(
                "concat: row counts {ra} and {rb} differ"
            )));
        }
        let av = self.value(a);
        let bv = self.value(b);
        let mut data = Vec::with_capacity(ra * (ca + cb));
        for r in 0..ra {
            data.extend_from_slice(&av.data()[r * ca..(r + 1) * ca]);
            data.extend_from_slice(&bv.data()[r * cb..(r + 1) * cb]);
        }
        let v = Tensor::new(vec![ra, ca + cb], data).unwrap();
        Ok(self.push(v, Expr::ConcatCols(a, b)))
    }

    pub fn mul_const(&mut self, x: VarId, c: Tensor) -> Result<VarId, NumgradError> {
        if self.value(x).shape() != c.shape() {
            return Err(NumgradError::Shape(format!(
                "mul_const: shapes {:?} and {:?} differ",
                self.value(x).shape(),
                c.shape()
            )));
        }
        let v = Tensor::new(
            c.shape().to_vec(),
            self.value(x)
                .data()
                .iter()
                .zip(c.data())
                .map(|(x, y)| x * y)
                .collect(),
        )
        .unwrap();
        Ok(self.push(v, Expr::MulConst { x, c }))
    }

    /// Diagonal-Gaussian KL per sample, summed over dimensions.
    pub fn gaussian_kl(
        &mut self,
        mq: VarId,
        sq: VarId,
        mp: VarId,
        sp: VarId,
    ) -> Result<VarId, NumgradError> {
        let (b, d) = self.want_rank2(mq, "gaussian_kl")?;
        for (id, role) in [(sq, "sigma_q"), (mp, "mu_p"), (sp, "sigma_p")] {
            let s = self.value(id).shape();
            if s != [b, d] {
                return Err(NumgradError::Shape(format!(
                    "gaussian_kl: {role} shape {s:?} does not match [{b}, {d}]"
                )));
            }
        }
        for (id, role) in [(sq, "sigma_q"), (sp, "sigma_p")] {
            if self.value(id).data().iter().any(|&v| v <= 0.0) {
                return Err(NumgradError::Domain(format!(
                    "gaussian_kl: nonpositive {role}"
                )));
            }
        }
        let mqv = self.value(mq).data();
        let sqv = self.value(sq).data();
        let mpv = self.value(mp).data();
        let spv = self.value(sp).data();
        let mut out = vec![0.0; b];
        for r in 0..b {
            let mut acc = 0.0;
            for c in 0..d {
                let i = r * d + c;
                let dm = mqv[i] - mpv[i];
                acc += (spv[i] / sqv[i]).ln()
                    + (sqv[i] * sqv[i] + dm * dm) / (2.0 * spv[i] * spv[i])
                    - 0.5;
            }
            out[r] = acc;
        }
        let v = Tensor::from_vec(out);
        Ok(self.push(v, Expr::GaussianKl { mq, sq, mp, sp }))
    }

    /// Per-sample Bernoulli negative log-likelihood of `target` under
    /// sigmoid(logits), with probabilities clamped to [EPS_P, 1-EPS_P].
    pub fn bernoulli_nll_logits(
        &mut self,
        logits: VarId,
        target: Tensor,
    ) -> Result<VarId, NumgradError> {
        let (b, d) = self.want_rank2(logits, "bernoulli_nll")?;
        if target.shape() != [b, d] {
            return Err(NumgradError::Shape(format!(
                "bernoulli_nll: target shape {:?} does not match [{b}, {d}]",
                target.shape()
            )));
        }
        let zv = self.value(logits).data();
        let mut out = vec![0.0; b];
        for r in 0..b {
            let mut acc = 0.0;
            for c in 0..d {
                let i = r * d + c;
                let p = sigmoid(zv[i]).clamp(EPS_P, 1.0 - EPS_P);
                let x = target.data()[i];
                acc -= x * p.ln() + (1.0 - x) * (1.0 - p).ln();
            }
            out[r] = acc;
        }
        let v = Tensor::from_vec(out);
        Ok(self.push(v, Expr::BernoulliNllLogits { logits, target }))
    }

    pub fn free_nats_hinge(&mut self, x: VarId, free: f64) -> VarId {
        let v = self.value(x).map(|v| (v - free).max(0.0));
        self.push(v, Expr::FreeNatsHinge { x, free })
    }

    pub fn mean_all(&mut self, x: VarId) -> VarId {
        let xv = self.value(x);
        let m = xv.data().iter().sum::<f64>() / xv.numel() as f64;
        self.push(Tensor::scalar(m), Expr::MeanAll(x))
    }

    pub fn sum_all(&mut self, x: VarId) -> VarId {
        let s = self.value(x).data().iter().sum::<f64>();
        self.push(Tensor::scalar(s), Expr::SumAll(x))
    }

    /// Reverse pass from `root`, seeded with ones. Returns one gradient slot
    /// per tape node (None where no gradient flowed).
    pub fn backward(&self, root: VarId) -> Vec<Option<Tensor>> {
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root] = Some(Tensor::full(self.value(root).shape(), 1.0));

        for id in (0..=root).rev() {
            let g = match grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.nodes[id].expr {
                Expr::Leaf => {
                    grads[id] = Some(g);
                    continue;
                }
                Expr::MatMulNt { x, w } => {
                    // y = X W^T  =>  dX = G W, dW = G^T X
                    let dx = matmul(&g, self.value(*w));
                    let dw = matmul_tn(&g, self.value(*x));
                    accumulate(&mut grads, *x, dx);
                    accumulate(&mut grads, *w, dw);
                }
                Expr::AddRow { x, b } => {
                    let (rows, n) = g.dims2();
                    let mut db = Tensor::zeros(&[n]);
                    for r in 0..rows {
                        for c in 0..n {
                            db.data_mut()[c] += g.data()[r * n + c];
                        }
                    }
                    accumulate(&mut grads, *x, g.clone());
                    accumulate(&mut grads, *b, db);
                }
                Expr::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Expr::Sub(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g.map(|v| -v));
                }
                Expr::Mul(a, b) => {
                    let da = elem_mul(&g, self.value(*b));
                    let db = elem_mul(&g, self.value(*a));
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Expr::Scale(x, c) => {
                    accumulate(&mut grads, *x, g.map(|v| v * c));
                }
                Expr::OneMinus(x) => {
                    accumulate(&mut grads, *x, g.map(|v| -v));
                }
                Expr::Tanh(x) => {
                    let y = &self.nodes[id].value;
                    let dx = zip_map(&g, y, |gv, yv| gv * (1.0 - yv * yv));
                    accumulate(&mut grads, *x, dx);
                }
                Expr::Sigmoid(x) => {
                    let y = &self.nodes[id].value;
                    let dx = zip_map(&g, y, |gv, yv| gv * yv * (1.0 - yv));
                    accumulate(&mut grads, *x, dx);
                }
                Expr::SoftplusFloor { x, floor } => {
                    // the additive floor has zero derivative
                    let _ = floor;
                    let xv = self.value(*x);
                    let dx = zip_map(&g, xv, |gv, v| gv * sigmoid(v));
                    accumulate(&mut grads, *x, dx);
                }
                Expr::ConcatCols(a, b) => {
                    let (rows, _) = g.dims2();
                    let ca = self.value(*a).shape()[1];
                    let cb = self.value(*b).shape()[1];
                    let mut da = Tensor::zeros(&[rows, ca]);
                    let mut db = Tensor::zeros(&[rows, cb]);
                    for r in 0..rows {
                        let row = &g.data()[r * (ca + cb)..(r + 1) * (ca + cb)];
                        da.data_mut()[r * ca..(r + 1) * ca].copy_from_slice(&row[..ca]);
                        db.data_mut()[r * cb..(r + 1) * cb].copy_from_slice(&row[ca..]);
                    }
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Expr::MulConst { x, c } => {
                    let dx = elem_mul(&g, c);
                    accumulate(&mut grads, *x, dx);
                }
                Expr::GaussianKl { mq, sq, mp, sp } => {
                    let (b, d) = self.value(*mq).dims2();
                    let mqv = self.value(*mq).data();
                    let sqv = self.value(*sq).data();
                    let mpv = self.value(*mp).data();
                    let spv = self.value(*sp).data();
                    let mut dmq = Tensor::zeros(&[b, d]);
                    let mut dsq = Tensor::zeros(&[b, d]);
                    let mut dmp = Tensor::zeros(&[b, d]);
                    let mut dsp = Tensor::zeros(&[b, d]);
                    for r in 0..b {
                        let gr = g.data()[r];
                        for c in 0..d {
                            let i = r * d + c;
                            let dm = mqv[i] - mpv[i];
                            let sp2 = spv[i] * spv[i];
                            dmq.data_mut()[i] = gr * dm / sp2;
                            dmp.data_mut()[i] = -gr * dm / sp2;
                            dsq.data_mut()[i] = gr * (-1.0 / sqv[i] + sqv[i] / sp2);
                            dsp.data_mut()[i] =
                                gr * (1.0 / spv[i] - (sqv[i] * sqv[i] + dm * dm) / (sp2 * spv[i]));
                        }
                    }
                    accumulate(&mut grads, *mq, dmq);
                    accumulate(&mut grads, *sq, dsq);
                    accumulate(&mut grads, *mp, dmp);
                    accumulate(&mut grads, *sp, dsp);
                }
                Expr::BernoulliNllLogits { logits, target } => {
                    let (b, d) = self.value(*logits).dims2();
                    let zv = self.value(*logits).data();
                    let mut dz = Tensor::zeros(&[b, d]);
                    for r in 0..b {
                        let gr = g.data()[r];
                        for c in 0..d {
                            let i = r * d + c;
                            let s = sigmoid(zv[i]);
                            // Zero gradient where the clamp is active, matching
                            // what finite differences see.
                            if s <= EPS_P || s >= 1.0 - EPS_P {
                                continue;
                            }
                            let x = target.data()[i];
                            dz.data_mut()[i] = gr * (s - x);
                        }
                    }
                    accumulate(&mut grads, *logits, dz);
                }
                Expr::FreeNatsHinge { x, free } => {
                    let xv = self.value(*x);
                    let dx = zip_map(&g, xv, |gv, v| if v > *free { gv } else { 0.0 });
                    accumulate(&mut grads, *x, dx);
                }
                Expr::MeanAll(x) => {
                    let xv = self.value(*x);
                    let gv = g.item() / xv.numel() as f64;
                    accumulate(&mut grads, *x, Tensor::full(xv.shape(), gv));
                }
                Expr::SumAll(x) => {
                    let xv = self.value(*x);
                    accumulate(&mut grads, *x, Tensor::full(xv.shape(), g.item()));
                }
            }
        }
        grads
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: VarId, g: Tensor) {
    match &mut grads[id] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn elem_mul(a: &Tensor, b: &Tensor) -> Tensor {
    zip_map(a, b, |x, y| x * y)
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    debug_assert_eq!(a.shape(), b.shape());
    Tensor::new(
        a.shape().to_vec(),
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
    )
    .unwrap()
}
