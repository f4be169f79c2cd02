//! Q(s, a) network: an LSTM over the action history, whose final hidden
//! state is concatenated with the flat state and the action and fed
//! through six dense layers (ReLU on the first five, linear output).
//!
//! All inputs are binary, so every product with an input vector is a sum
//! of weight rows. Weight matrices are stored `(in, out)`; the LSTM gate
//! blocks are ordered input, forget, cell, output.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{s, Array2, ArrayView2, ArrayViewMut2, Axis, NdFloat};
use num_traits::FromPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cards::CardSet;
use crate::error::{Error, Result};
use crate::features::{StateFeatures, ACTION_LEN, FLAT_LEN, HISTORY_STEPS, HISTORY_STEP_LEN};

pub const DEFAULT_HIDDEN: usize = 128;
pub const DEFAULT_WIDTH: usize = 512;
pub const DENSE_LAYERS: usize = 6;

const MAGIC: &[u8; 8] = b"GZQNET\0\0";
pub const FORMAT_VERSION: u32 = 1;

pub trait Real: NdFloat + FromPrimitive + Default {}
impl Real for f32 {}
impl Real for f64 {}

fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("representable")
}

fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetShape {
    pub hidden: usize,
    pub width: usize,
}

impl Default for NetShape {
    fn default() -> Self {
        NetShape {
            hidden: DEFAULT_HIDDEN,
            width: DEFAULT_WIDTH,
        }
    }
}

impl NetShape {
    pub fn dense_input(&self) -> usize {
        self.hidden + FLAT_LEN + ACTION_LEN
    }

    /// Shapes of all tensors in declared order.
    pub fn tensor_shapes(&self) -> Vec<(usize, usize)> {
        let (h, w) = (self.hidden, self.width);
        let mut v = vec![(HISTORY_STEP_LEN, 4 * h), (h, 4 * h), (1, 4 * h)];
        let mut fan_in = self.dense_input();
        for l in 0..DENSE_LAYERS {
            let out = if l + 1 == DENSE_LAYERS { 1 } else { w };
            v.push((fan_in, out));
            v.push((1, out));
            fan_in = out;
        }
        v
    }

    pub fn tensor_names() -> Vec<String> {
        let mut v: Vec<String> = ["lstm.wx", "lstm.wh", "lstm.b"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for l in 1..=DENSE_LAYERS {
            v.push(format!("dense{l}.w"));
            v.push(format!("dense{l}.b"));
        }
        v
    }
}

const WX: usize = 0;
const WH: usize = 1;
const LB: usize = 2;

fn dense_w(l: usize) -> usize {
    3 + 2 * l
}

fn dense_b(l: usize) -> usize {
    4 + 2 * l
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<F> {
    pub shape: NetShape,
    /// Declared order: LSTM input weights, recurrent weights, bias, then
    /// weight and bias of each dense layer.
    pub tensors: Vec<Array2<F>>,
}

impl<F: Real> NetParams<F> {
    pub fn zeros(shape: NetShape) -> Self {
        let tensors = shape
            .tensor_shapes()
            .into_iter()
            .map(Array2::zeros)
            .collect();
        NetParams { shape, tensors }
    }

    /// Uniform in +-1/sqrt(fan_in) per layer (the LSTM uses 1/sqrt(H)); weights
    /// feeding a ReLU use the He bound sqrt(6/fan_in) so deep signals keep their scale.
    pub fn init(shape: NetShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shapes = shape.tensor_shapes();
        let mut tensors = Vec::with_capacity(shapes.len());
        for (k, &(r, c)) in shapes.iter().enumerate() {
            let fan_in = if k <= LB {
                shape.hidden
            } else if (k - 3) % 2 == 0 {
                r
            } else {
                shapes[k - 1].0
            };
            let relu_weight = k > LB && (k - 3) % 2 == 0 && k + 2 < shapes.len();
            let bound = if relu_weight {
                (6.0 / fan_in as f64).sqrt()
            } else {
                1.0 / (fan_in as f64).sqrt()
            };
            let data: Vec<F> = (0..r * c)
                .map(|_| real(rng.random_range(-bound..bound)))
                .collect();
            tensors.push(Array2::from_shape_vec((r, c), data).expect("shape"));
        }
        NetParams { shape, tensors }
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn cast<G: Real>(&self) -> NetParams<G> {
        NetParams {
            shape: self.shape,
            tensors: self
                .tensors
                .iter()
                .map(|t| t.mapv(|x| real::<G>(x.to_f64().expect("finite"))))
                .collect(),
        }
    }

    fn check_shape(&self, other: &NetParams<F>) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: StateFeatures,
    pub action: CardSet,
    pub target: f32,
}

/// Active input rows, precomputed per sample.
struct Sparse {
    /// Rows of the first dense layer (already offset past the hidden part).
    dense: Vec<usize>,
    steps: [Vec<usize>; HISTORY_STEPS],
}

impl Sparse {
    fn new(state: &StateFeatures, action: CardSet, hidden: usize) -> Sparse {
        let mut dense = Vec::with_capacity(160);
        state.base_ones(&mut dense);
        state.flag_ones(&mut dense);
        for i in dense.iter_mut() {
            *i += hidden;
        }
        dense.extend(action.iter().map(|id| hidden + FLAT_LEN + id.index()));
        Sparse {
            dense,
            steps: std::array::from_fn(|t| state.history_step_ones(t)),
        }
    }
}

fn add_rows<F: Real>(mut row: ndarray::ArrayViewMut1<F>, w: &Array2<F>, rows: &[usize]) {
    for &k in rows {
        row += &w.row(k);
    }
}

struct LstmCache<F> {
    /// h_0..h_T and c_0..c_T.
    hs: Vec<Array2<F>>,
    cs: Vec<Array2<F>>,
    /// Post-activation gates per step.
    gates: Vec<Array2<F>>,
}

fn lstm_forward<F: Real>(p: &NetParams<F>, steps: &[&[Vec<usize>; HISTORY_STEPS]]) -> LstmCache<F> {
    let n = steps.len();
    let h = p.shape.hidden;
    let (wx, wh, b) = (&p.tensors[WX], &p.tensors[WH], &p.tensors[LB]);
    let mut hs = vec![Array2::zeros((n, h))];
    let mut cs = vec![Array2::zeros((n, h))];
    let mut gates = Vec::with_capacity(HISTORY_STEPS);
    for t in 0..HISTORY_STEPS {
        let mut z = hs[t].dot(wh);
        z += b;
        for (i, st) in steps.iter().enumerate() {
            add_rows(z.row_mut(i), wx, &st[t]);
        }
        z.slice_mut(s![.., 0..2 * h]).mapv_inplace(sigmoid);
        z.slice_mut(s![.., 2 * h..3 * h]).mapv_inplace(|x| x.tanh());
        z.slice_mut(s![.., 3 * h..]).mapv_inplace(sigmoid);
        let (ig, fg, gg, og) = split_gates(z.view(), h);
        let c = &fg * &cs[t] + &ig * &gg;
        let hn = &og * &c.mapv(|x| x.tanh());
        cs.push(c);
        hs.push(hn);
        gates.push(z);
    }
    LstmCache { hs, cs, gates }
}

fn split_gates<F>(
    z: ArrayView2<F>,
    h: usize,
) -> (ArrayView2<F>, ArrayView2<F>, ArrayView2<F>, ArrayView2<F>) {
    (
        z.slice_move(s![.., 0..h]),
        z.slice_move(s![.., h..2 * h]),
        z.slice_move(s![.., 2 * h..3 * h]),
        z.slice_move(s![.., 3 * h..]),
    )
}

/// First-layer pre-activation contribution of the hidden state plus bias.
fn dense1_top<F: Real>(p: &NetParams<F>, h: &Array2<F>) -> Array2<F> {
    let w1 = &p.tensors[dense_w(0)];
    let mut a = h.dot(&w1.slice(s![0..p.shape.hidden, ..]));
    a += &p.tensors[dense_b(0)];
    a
}

/// Layers 2..6 given the first-layer pre-activations; returns all
/// pre-activations (including the first) and post-ReLU outputs.
fn dense_tail<F: Real>(p: &NetParams<F>, a1: Array2<F>) -> (Vec<Array2<F>>, Vec<Array2<F>>) {
    let mut pre = vec![a1];
    let mut post = Vec::with_capacity(DENSE_LAYERS - 1);
    for l in 1..DENSE_LAYERS {
        let r = pre[l - 1].mapv(|x| x.max(F::zero()));
        let mut a = r.dot(&p.tensors[dense_w(l)]);
        a += &p.tensors[dense_b(l)];
        post.push(r);
        pre.push(a);
    }
    (pre, post)
}

struct Cache<F> {
    sparse: Vec<Sparse>,
    lstm: LstmCache<F>,
    pre: Vec<Array2<F>>,
    post: Vec<Array2<F>>,
}

fn forward_cached<F: Real>(p: &NetParams<F>, batch: &[Sample]) -> Cache<F> {
    let sparse: Vec<Sparse> = batch
        .iter()
        .map(|x| Sparse::new(&x.state, x.action, p.shape.hidden))
        .collect();
    let steps: Vec<_> = sparse.iter().map(|x| &x.steps).collect();
    let lstm = lstm_forward(p, &steps);
    let mut a1 = dense1_top(p, &lstm.hs[HISTORY_STEPS]);
    let w1 = &p.tensors[dense_w(0)];
    for (i, sp) in sparse.iter().enumerate() {
        add_rows(a1.row_mut(i), w1, &sp.dense);
    }
    let (pre, post) = dense_tail(p, a1);
    Cache {
        sparse,
        lstm,
        pre,
        post,
    }
}

/// Q estimates for every sample (targets ignored).
pub fn forward<F: Real>(p: &NetParams<F>, batch: &[Sample]) -> Vec<F> {
    if batch.is_empty() {
        return Vec::new();
    }
    let cache = forward_cached(p, batch);
    cache.pre[DENSE_LAYERS - 1].column(0).to_vec()
}

/// On/off state of every hidden ReLU unit over the batch; finite
/// differences are only meaningful where this does not change.
pub fn relu_pattern<F: Real>(p: &NetParams<F>, batch: &[Sample]) -> Vec<bool> {
    let cache = forward_cached(p, batch);
    cache.pre[..DENSE_LAYERS - 1]
        .iter()
        .flat_map(|a| a.iter().map(|&x| x > F::zero()))
        .collect()
}

/// Mean squared error over the batch and its exact gradient.
pub fn loss_and_grads<F: Real>(p: &NetParams<F>, batch: &[Sample]) -> Result<(F, NetParams<F>)> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    if let Some(x) = batch.iter().find(|x| !x.target.is_finite()) {
        return Err(Error::NonFinite(format!("target {}", x.target)));
    }
    let n = batch.len();
    let (h, w) = (p.shape.hidden, p.shape.width);
    let cache = forward_cached(p, batch);
    let q = cache.pre[DENSE_LAYERS - 1].column(0);
    let mut mse = F::zero();
    let scale = real::<F>(2.0 / n as f64);
    let mut d = Array2::zeros((n, 1));
    for i in 0..n {
        let err = q[i] - real::<F>(batch[i].target as f64);
        mse += err * err;
        d[[i, 0]] = err * scale;
    }
    mse /= real(n as f64);

    let mut g = NetParams::zeros(p.shape);
    // Dense layers, last to first; `d` is the gradient w.r.t. layer l's output.
    for l in (0..DENSE_LAYERS).rev() {
        if l + 1 < DENSE_LAYERS {
            ndarray::Zip::from(&mut d)
                .and(&cache.pre[l])
                .for_each(|dv, &a| {
                    if a <= F::zero() {
                        *dv = F::zero();
                    }
                });
        }
        g.tensors[dense_b(l)] = d.sum_axis(Axis(0)).insert_axis(Axis(0));
        if l > 0 {
            g.tensors[dense_w(l)] = cache.post[l - 1].t().dot(&d);
            d = d.dot(&p.tensors[dense_w(l)].t());
        } else {
            let hidden = &cache.lstm.hs[HISTORY_STEPS];
            let gw = &mut g.tensors[dense_w(0)];
            gw.slice_mut(s![0..h, ..]).assign(&hidden.t().dot(&d));
            for (i, sp) in cache.sparse.iter().enumerate() {
                for &k in &sp.dense {
                    let mut row = gw.row_mut(k);
                    row += &d.row(i);
                }
            }
            d = d.dot(&p.tensors[dense_w(0)].slice(s![0..h, ..]).t());
        }
    }
    debug_assert_eq!(d.dim(), (n, h));
    let _ = w;

    // Back through time.
    let one = F::one();
    let mut dh = d;
    let mut dc: Array2<F> = Array2::zeros((n, h));
    for t in (0..HISTORY_STEPS).rev() {
        let z = &cache.lstm.gates[t];
        let (ig, fg, gg, og) = split_gates(z.view(), h);
        let tc = cache.lstm.cs[t + 1].mapv(|x| x.tanh());
        let c_prev = &cache.lstm.cs[t];
        let mut dz = Array2::zeros((n, 4 * h));
        {
            let do_ = &dh * &tc;
            dc = dc + &dh * &og * &tc.mapv(|x| one - x * x);
            let (mut di, mut df, mut dg, mut dout) = split_gates_mut(dz.view_mut(), h);
            ndarray::Zip::from(&mut di)
                .and(&dc)
                .and(&gg)
                .and(&ig)
                .for_each(|o, &c, &g, &i| *o = c * g * i * (one - i));
            ndarray::Zip::from(&mut df)
                .and(&dc)
                .and(c_prev)
                .and(&fg)
                .for_each(|o, &c, &cp, &f| *o = c * cp * f * (one - f));
            ndarray::Zip::from(&mut dg)
                .and(&dc)
                .and(&ig)
                .and(&gg)
                .for_each(|o, &c, &i, &g| *o = c * i * (one - g * g));
            ndarray::Zip::from(&mut dout)
                .and(&do_)
                .and(&og)
                .for_each(|o, &d, &v| *o = d * v * (one - v));
        }
        dc = &dc * &fg;
        g.tensors[WH] += &cache.lstm.hs[t].t().dot(&dz);
        g.tensors[LB] += &dz.sum_axis(Axis(0)).insert_axis(Axis(0));
        let gwx = &mut g.tensors[WX];
        for (i, sp) in cache.sparse.iter().enumerate() {
            for &k in &sp.steps[t] {
                let mut row = gwx.row_mut(k);
                row += &dz.row(i);
            }
        }
        dh = dz.dot(&p.tensors[WH].t());
    }
    if !mse.is_finite() {
        return Err(Error::NonFinite("mse".into()));
    }
    Ok((mse, g))
}

fn split_gates_mut<F>(
    z: ArrayViewMut2<F>,
    h: usize,
) -> (
    ArrayViewMut2<F>,
    ArrayViewMut2<F>,
    ArrayViewMut2<F>,
    ArrayViewMut2<F>,
) {
    let (a, rest) = z.split_at(Axis(1), h);
    let (b, rest) = rest.split_at(Axis(1), h);
    let (c, d) = rest.split_at(Axis(1), h);
    (a, b, c, d)
}

/// One candidate action at a decision point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub flags: [[u8; 3]; 3],
    pub action: CardSet,
}

/// Q of every candidate at one decision, sharing the history encoding and
/// the state part of the first layer. `state.flags` is ignored; each
/// candidate supplies its own.
pub fn score_candidates<F: Real>(
    p: &NetParams<F>,
    state: &StateFeatures,
    candidates: &[Candidate],
) -> Vec<F> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let hidden = p.shape.hidden;
    let steps: [Vec<usize>; HISTORY_STEPS] = std::array::from_fn(|t| state.history_step_ones(t));
    let lstm = lstm_forward(p, &[&steps]);
    let w1 = &p.tensors[dense_w(0)];
    let mut base = dense1_top(p, &lstm.hs[HISTORY_STEPS]);
    let mut rows = Vec::with_capacity(160);
    state.base_ones(&mut rows);
    for k in rows.iter_mut() {
        *k += hidden;
    }
    add_rows(base.row_mut(0), w1, &rows);
    let mut a1 = Array2::zeros((candidates.len(), p.shape.width));
    for (i, c) in candidates.iter().enumerate() {
        let mut row = a1.row_mut(i);
        row.assign(&base.row(0));
        rows.clear();
        StateFeatures {
            flags: c.flags,
            ..state.clone()
        }
        .flag_ones(&mut rows);
        rows.extend(c.action.iter().map(|id| FLAT_LEN + id.index()));
        for k in rows.iter_mut() {
            *k += hidden;
        }
        add_rows(row, w1, &rows);
    }
    let (pre, _) = dense_tail(p, a1);
    pre[DENSE_LAYERS - 1].column(0).to_vec()
}

/// Momentum SGD: `v <- momentum * v + g; p <- p - lr * v`. Nothing is
/// written if any updated value would be non-finite.
pub fn sgd_step<F: Real>(
    params: &mut NetParams<F>,
    grads: &NetParams<F>,
    velocity: &mut NetParams<F>,
    lr: F,
    momentum: F,
) -> Result<()> {
    params.check_shape(grads)?;
    params.check_shape(velocity)?;
    for ((p, g), v) in params
        .tensors
        .iter()
        .zip(&grads.tensors)
        .zip(&velocity.tensors)
    {
        let ok = ndarray::Zip::from(p).and(g).and(v).all(|&p, &g, &v| {
            let nv = momentum * v + g;
            nv.is_finite() && (p - lr * nv).is_finite()
        });
        if !ok {
            return Err(Error::NonFinite("parameter update".into()));
        }
    }
    for ((p, g), v) in params
        .tensors
        .iter_mut()
        .zip(&grads.tensors)
        .zip(velocity.tensors.iter_mut())
    {
        ndarray::Zip::from(p).and(g).and(v).for_each(|p, &g, v| {
            *v = momentum * *v + g;
            *p -= lr * *v;
        });
    }
    Ok(())
}

/// Width in bytes of the stored element type.
pub trait Storable: Real {
    const WIDTH: u32;
    fn put(self, out: &mut Vec<u8>);
    fn get(bytes: &[u8]) -> Self;
}

impl Storable for f32 {
    const WIDTH: u32 = 4;
    fn put(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn get(b: &[u8]) -> Self {
        f32::from_le_bytes(b.try_into().expect("4 bytes"))
    }
}

impl Storable for f64 {
    const WIDTH: u32 = 8;
    fn put(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn get(b: &[u8]) -> Self {
        f64::from_le_bytes(b.try_into().expect("8 bytes"))
    }
}

pub fn to_bytes<F: Storable>(p: &NetParams<F>) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + p.num_params() * F::WIDTH as usize);
    out.extend_from_slice(MAGIC);
    let shapes = p.shape.tensor_shapes();
    let header = [
        FORMAT_VERSION,
        F::WIDTH,
        p.shape.hidden as u32,
        p.shape.width as u32,
        HISTORY_STEP_LEN as u32,
        p.shape.dense_input() as u32,
        shapes.len() as u32,
    ];
    for x in header {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for (r, c) in &shapes {
        out.extend_from_slice(&(*r as u32).to_le_bytes());
        out.extend_from_slice(&(*c as u32).to_le_bytes());
    }
    for t in &p.tensors {
        for &x in t.iter() {
            x.put(&mut out);
        }
    }
    out
}

pub fn from_bytes<F: Storable>(bytes: &[u8], origin: &str) -> Result<NetParams<F>> {
    let bad = |reason: String| Error::Checkpoint {
        path: origin.into(),
        reason,
    };
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let chunk = bytes
            .get(pos..pos + n)
            .ok_or_else(|| bad(format!("truncated at byte {pos}")))?;
        pos += n;
        Ok(chunk)
    };
    if take(8)? != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let mut u32s = |n: usize| -> Result<Vec<u32>> {
        let b = take(4 * n)?;
        Ok(b.chunks(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    };
    let h = u32s(7)?;
    if h[0] != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {}", h[0])));
    }
    if h[1] != F::WIDTH {
        return Err(bad(format!(
            "element width {} bytes, expected {}",
            h[1],
            F::WIDTH
        )));
    }
    let shape = NetShape {
        hidden: h[2] as usize,
        width: h[3] as usize,
    };
    if h[4] as usize != HISTORY_STEP_LEN || h[5] as usize != shape.dense_input() {
        return Err(bad("input sizes do not match this build".into()));
    }
    let expected = shape.tensor_shapes();
    if h[6] as usize != expected.len() {
        return Err(bad(format!(
            "{} tensors, expected {}",
            h[6],
            expected.len()
        )));
    }
    let dims = u32s(2 * expected.len())?;
    for (k, &(r, c)) in expected.iter().enumerate() {
        if dims[2 * k] as usize != r || dims[2 * k + 1] as usize != c {
            return Err(bad(format!(
                "tensor {k} has shape {}x{}, expected {r}x{c}",
                dims[2 * k],
                dims[2 * k + 1]
            )));
        }
    }
    let width = F::WIDTH as usize;
    let mut tensors = Vec::with_capacity(expected.len());
    for &(r, c) in &expected {
        let raw = take(r * c * width)?;
        let data: Vec<F> = raw.chunks(width).map(F::get).collect();
        tensors.push(Array2::from_shape_vec((r, c), data).expect("shape"));
    }
    if pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - pos)));
    }
    let p = NetParams { shape, tensors };
    if !p.is_finite() {
        return Err(bad("non-finite parameter".into()));
    }
    Ok(p)
}

/// Writes atomically (temporary file, then rename).
pub fn save<F: Storable>(p: &NetParams<F>, path: &Path) -> Result<()> {
    let tmp = path.with_extension("ckpt.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&to_bytes(p))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load<F: Storable>(path: &Path) -> Result<NetParams<F>> {
    let bytes = fs::read(path).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    from_bytes(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: NetShape = NetShape {
        hidden: 8,
        width: 16,
    };

    fn sample(seed: u64, target: f32) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = || -> CardSet {
            (0..108u8)
                .filter(|_| rng.random_bool(0.1))
                .map(|i| crate::cards::CardId::new(i as usize).unwrap())
                .collect()
        };
        let own = set();
        let state = StateFeatures {
            own_hand: own,
            others_hands: own.complement(),
            last_actions: [set(), set(), set(), set()],
            played: [set(), set(), set()],
            remaining: [3, 0, 27],
            level: crate::cards::Level::TWO,
            flags: [[0, 1, 0], [1, 0, 0], [0, 0, 1]],
            history: std::array::from_fn(|_| set()),
        };
        Sample {
            state,
            action: set(),
            target,
        }
    }

    #[test]
    fn shapes() {
        let p = NetParams::<f32>::zeros(NetShape::default());
        assert_eq!(p.tensors[dense_w(0)].dim(), (1311, 512));
        assert_eq!(p.tensors[WX].dim(), (432, 512));
        assert_eq!(p.tensors[dense_w(5)].dim(), (512, 1));
        assert_eq!(NetShape::tensor_names().len(), p.tensors.len());
    }

    #[test]
    fn zero_params_give_zero() {
        let p = NetParams::<f32>::zeros(SMALL);
        assert_eq!(
            forward(&p, &[sample(1, 0.0), sample(2, 0.0)]),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn init_is_deterministic() {
        assert_eq!(
            NetParams::<f32>::init(SMALL, 5),
            NetParams::<f32>::init(SMALL, 5)
        );
        assert_ne!(
            NetParams::<f32>::init(SMALL, 5),
            NetParams::<f32>::init(SMALL, 6)
        );
    }

    #[test]
    fn duplicated_samples_agree() {
        let p = NetParams::<f32>::init(SMALL, 1);
        let q = forward(&p, &[sample(3, 0.0), sample(4, 0.0), sample(3, 0.0)]);
        assert_eq!(q[0], q[2]);
        assert_ne!(q[0], q[1]);
    }

    #[test]
    fn candidate_scoring_matches_batch_forward() {
        let p = NetParams::<f64>::init(SMALL, 2);
        let s = sample(5, 0.0);
        let cands: Vec<Candidate> = (0..4)
            .map(|k| Candidate {
                flags: [[1, 0, 0], [0, k % 2, 1 - k % 2], [0, 0, 1]],
                action: sample(10 + k as u64, 0.0).action,
            })
            .collect();
        let scored = score_candidates(&p, &s.state, &cands);
        let batch: Vec<Sample> = cands
            .iter()
            .map(|c| Sample {
                state: StateFeatures {
                    flags: c.flags,
                    ..s.state.clone()
                },
                action: c.action,
                target: 0.0,
            })
            .collect();
        let direct = forward(&p, &batch);
        for (a, b) in scored.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn targets_at_output_give_zero_loss_and_grads() {
        let p = NetParams::<f64>::init(SMALL, 3);
        let mut batch = vec![sample(1, 0.0), sample(2, 0.0)];
        let q = forward(&p, &batch);
        for (s, q) in batch.iter_mut().zip(q) {
            s.target = q as f32;
        }
        let p32 = p.cast::<f32>();
        let q32 = forward(&p32, &batch);
        for (s, q) in batch.iter_mut().zip(q32) {
            s.target = q;
        }
        let (mse, g) = loss_and_grads(&p32, &batch).unwrap();
        assert_eq!(mse, 0.0);
        assert!(g.tensors.iter().all(|t| t.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn batch_loss_is_mean_of_singles() {
        let p = NetParams::<f64>::init(SMALL, 4);
        let (a, b) = (sample(1, 0.5), sample(2, -1.0));
        let (la, _) = loss_and_grads(&p, std::slice::from_ref(&a)).unwrap();
        let (lb, _) = loss_and_grads(&p, std::slice::from_ref(&b)).unwrap();
        let (lab, _) = loss_and_grads(&p, &[a, b]).unwrap();
        assert!((lab - (la + lb) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_target_rejected() {
        let p = NetParams::<f32>::init(SMALL, 1);
        assert!(matches!(
            loss_and_grads(&p, &[sample(1, f32::NAN)]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn sgd_basics() {
        let p0 = NetParams::<f64>::init(SMALL, 1);
        let (_, g) = loss_and_grads(&p0, &[sample(1, 1.0)]).unwrap();
        let mut p = p0.clone();
        let mut v = NetParams::zeros(SMALL);
        sgd_step(&mut p, &g, &mut v, 0.0, 0.9).unwrap();
        assert_eq!(p, p0);
        let mut v = NetParams::zeros(SMALL);
        sgd_step(&mut p, &g, &mut v, 0.1, 0.0).unwrap();
        for ((a, b), gr) in p.tensors.iter().zip(&p0.tensors).zip(&g.tensors) {
            assert_eq!(a, &(b - &(gr * 0.1)));
        }
        let mut bad = g.clone();
        bad.tensors[0][[0, 0]] = f64::INFINITY;
        let before = p.clone();
        assert!(sgd_step(&mut p, &bad, &mut v, 0.1, 0.9).is_err());
        assert_eq!(p, before);
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = NetParams::<f32>::init(SMALL, 9);
        let bytes = to_bytes(&p);
        assert_eq!(from_bytes::<f32>(&bytes, "mem").unwrap(), p);
        assert!(from_bytes::<f32>(&bytes[..bytes.len() - 1], "mem").is_err());
        assert!(from_bytes::<f64>(&bytes, "mem").is_err());
        let other = to_bytes(&NetParams::<f32>::init(
            NetShape {
                hidden: 8,
                width: 8,
            },
            1,
        ));
        let mut mixed = other[..36].to_vec();
        mixed.extend_from_slice(&bytes[36..]);
        assert!(from_bytes::<f32>(&mixed, "mem").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p1.ckpt");
        save(&p, &path).unwrap();
        assert_eq!(load::<f32>(&path).unwrap(), p);
    }
}
