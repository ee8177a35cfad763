//! Discrete fractional Fourier transform via chirp multiplication, chirp
//! convolution and chirp multiplication on a 2x oversampled centred grid.
//!
//! Samples live on a centred grid with spacing `1/sqrt(N)`: buffer index `i`
//! holds position `p = i - N/2`. With that convention order 1 is exactly the
//! centred unitary DFT.
//!
//! Orders outside `0.5 <= |a| <= 1.5` are first moved into that band with one
//! centred DFT or inverse DFT, since `cot` and `csc` of the angle blow up near
//! multiples of pi.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::IqBuffer;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Reduces `a` modulo 4 into `[0, 4)`.
pub fn canonicalize_order(a: f64) -> f64 {
    let r = a.rem_euclid(4.0);
    // rem_euclid rounds tiny negative inputs up to exactly 4.0
    if r >= 4.0 {
        0.0
    } else {
        r
    }
}

/// A transform order in canonical form plus its derived angle quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrftOrder {
    a: f64,
}

impl FrftOrder {
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() {
            return invalid(format!("transform order must be finite, got {a}"));
        }
        Ok(Self { a: canonicalize_order(a) })
    }

    /// Canonical order in `[0, 4)`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Rotation angle `a·π/2`.
    pub fn alpha(&self) -> f64 {
        self.a * PI / 2.0
    }

    /// `cot α`; `None` when α is a multiple of π.
    pub fn gamma(&self) -> Option<f64> {
        (self.a % 2.0 != 0.0).then(|| 1.0 / self.alpha().tan())
    }

    /// `csc α`; `None` when α is a multiple of π.
    pub fn beta(&self) -> Option<f64> {
        (self.a % 2.0 != 0.0).then(|| 1.0 / self.alpha().sin())
    }

    /// Kernel constant `sqrt(1 - j·cot α)` (principal root).
    pub fn kernel_constant(&self) -> Option<Complex64> {
        self.gamma().map(|g| Complex64::new(1.0, -g).sqrt())
    }

    /// Order mapped into `(-2, 2]`.
    fn signed(&self) -> f64 {
        if self.a > 2.0 {
            self.a - 4.0
        } else {
            self.a
        }
    }
}

impl fmt::Display for FrftOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineVariant {
    /// Full-rate linear convolution of the oversampled sequence.
    SinglePhase,
    /// Even/odd polyphase split; two half-rate circular convolutions.
    #[default]
    TwoPhase,
}

impl fmt::Display for EngineVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineVariant::SinglePhase => "single_phase",
            EngineVariant::TwoPhase => "two_phase",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrftResult {
    pub coefficients: Vec<Complex64>,
    pub order: FrftOrder,
    /// FFT work in units of one N-point transform: a transform of length
    /// `L >= N` counts `L / N`; shorter transforms are not counted.
    pub fft_calls: u64,
    /// Raw number of FFT invocations of any length.
    pub fft_invocations: u64,
}

impl FrftResult {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm()).collect()
    }
}

/// Precomputed FFT plans for one (power-of-two) transform length.
///
/// Plans are immutable; one engine may be shared across threads.
pub struct FrftEngine {
    n: usize,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
    fwd_2n: Arc<dyn Fft<f64>>,
    inv_2n: Arc<dyn Fft<f64>>,
    fwd_8n: Arc<dyn Fft<f64>>,
    inv_8n: Arc<dyn Fft<f64>>,
    /// `exp(jπk/N)/N` for signed bin k, used for the half-sample shift.
    half_shift: Vec<Complex64>,
    scratch_len: usize,
}

impl fmt::Debug for FrftEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrftEngine").field("n", &self.n).finish()
    }
}

thread_local! {
    // Work buffers are big enough that fresh zeroed allocations show up in
    // profiles; recycle them per thread.
    static POOL: RefCell<Vec<Vec<Complex64>>> = const { RefCell::new(Vec::new()) };
}

/// Buffer of length `len` with unspecified contents; callers overwrite it.
fn take_dirty(len: usize) -> Vec<Complex64> {
    // prefer an exact length so that no tail needs zeroing
    let mut v = POOL
        .with(|p| {
            let mut p = p.borrow_mut();
            let i = p.iter().rposition(|b| b.len() == len).or_else(|| p.len().checked_sub(1))?;
            Some(p.swap_remove(i))
        })
        .unwrap_or_default();
    if v.len() < len {
        v.resize(len, ZERO);
    }
    v.truncate(len);
    v
}

fn give(bufs: impl IntoIterator<Item = Vec<Complex64>>) {
    POOL.with(|p| {
        let mut p = p.borrow_mut();
        for b in bufs {
            if p.len() < 32 {
                p.push(b);
            }
        }
    });
}

/// FFT runner that tallies cost and reuses one scratch buffer.
struct Cost {
    n: usize,
    calls: u64,
    invocations: u64,
    scratch: Vec<Complex64>,
}

impl Cost {
    fn new(n: usize, scratch_len: usize) -> Self {
        Self { n, calls: 0, invocations: 0, scratch: take_dirty(scratch_len) }
    }

    fn run(&mut self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let len = plan.get_inplace_scratch_len();
        plan.process_with_scratch(buf, &mut self.scratch[..len]);
        self.invocations += 1;
        if buf.len() >= self.n {
            self.calls += (buf.len() / self.n) as u64;
        }
    }
}

impl Drop for Cost {
    fn drop(&mut self) {
        give([std::mem::take(&mut self.scratch)]);
    }
}

/// Which full Fourier step brings an order into the stable band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shift {
    None = 0,
    Forward = 1,
    Inverse = 2,
}

/// Maps a signed order in `(-2, 2]` to its band shift and core order.
fn reduce(b: f64) -> (Shift, f64) {
    if b.abs() < 0.5 {
        (Shift::Inverse, b + 1.0)
    } else if b > 1.5 {
        (Shift::Forward, b - 1.0)
    } else if b < -1.5 {
        (Shift::Inverse, b + 1.0)
    } else {
        (Shift::None, b)
    }
}

/// One input transformed at many orders.
///
/// The order-independent front end (band shift and interpolation) is computed
/// once per shift and reused, so an order search pays for it only once. Each
/// [`FrftResult`] reports the FFT work actually done by that call.
pub struct FrftSession<'e> {
    engine: &'e FrftEngine,
    variant: EngineVariant,
    len: usize,
    input: Vec<Complex64>,
    /// Per shift: two-phase `[even | odd]` samples indexed by `p mod N`, or
    /// the single-phase 2N-point interpolated sequence.
    front: [Option<Vec<Complex64>>; 3],
}

impl Drop for FrftSession<'_> {
    fn drop(&mut self) {
        give(self.front.iter_mut().filter_map(Option::take));
        give([std::mem::take(&mut self.input)]);
    }
}

impl FrftSession<'_> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn variant(&self) -> EngineVariant {
        self.variant
    }

    pub fn transform(&mut self, a: f64) -> Result<FrftResult> {
        let order = FrftOrder::new(a)?;
        let e = self.engine;
        let mut cost = Cost::new(e.n, e.scratch_len);
        let signed = order.signed();
        if signed == 0.0 {
            return Ok(FrftResult {
                coefficients: self.input[..self.len].to_vec(),
                order,
                fft_calls: 0,
                fft_invocations: 0,
            });
        }
        let (shift, b) = reduce(signed);
        if self.front[shift as usize].is_none() {
            let f = e.front_end(&self.input, shift, self.variant, &mut cost);
            self.front[shift as usize] = Some(f);
        }
        let front = self.front[shift as usize].as_deref().expect("front end computed above");
        let mut coefficients = match self.variant {
            EngineVariant::SinglePhase => e.core_single(front, b, &mut cost),
            EngineVariant::TwoPhase => e.core_two_phase(front, b, &mut cost),
        };
        coefficients.truncate(self.len);
        Ok(FrftResult { coefficients, order, fft_calls: cost.calls, fft_invocations: cost.invocations })
    }
}

impl FrftEngine {
    /// Engine for inputs of length `len`; lengths that are not a power of two
    /// are zero-padded up to the next one.
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return invalid(format!("transform length must be at least 2, got {len}"));
        }
        let n = len.next_power_of_two();
        let mut planner = FftPlanner::new();
        let plans = [
            planner.plan_fft_forward(n),
            planner.plan_fft_inverse(n),
            planner.plan_fft_forward(2 * n),
            planner.plan_fft_inverse(2 * n),
            planner.plan_fft_forward(8 * n),
            planner.plan_fft_inverse(8 * n),
        ];
        let scratch_len = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let [fwd_n, inv_n, fwd_2n, inv_2n, fwd_8n, inv_8n] = plans;
        Ok(Self {
            n,
            fwd_n,
            inv_n,
            fwd_2n,
            inv_2n,
            fwd_8n,
            inv_8n,
            half_shift: (0..n)
                .map(|k| {
                    let ks = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                    Complex64::from_polar(1.0 / n as f64, PI * ks / n as f64)
                })
                .collect(),
            scratch_len,
        })
    }

    /// Shared engine for `len`, built once per padded length.
    pub fn cached(len: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FrftEngine>>>> = OnceLock::new();
        let n = len.max(2).next_power_of_two();
        let mut map = CACHE.get_or_init(Default::default).lock().expect("engine cache poisoned");
        if let Some(e) = map.get(&n) {
            return Ok(Arc::clone(e));
        }
        let e = Arc::new(Self::new(len)?);
        map.insert(n, Arc::clone(&e));
        Ok(e)
    }

    /// Padded transform length.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Starts a session for repeated transforms of `x`.
    pub fn session(&self, x: &[Complex64], variant: EngineVariant) -> Result<FrftSession<'_>> {
        if x.len() < 2 {
            return invalid(format!("transform input needs at least 2 samples, got {}", x.len()));
        }
        if x.len() > self.n {
            return invalid(format!("input of {} samples exceeds engine length {}", x.len(), self.n));
        }
        if variant == EngineVariant::TwoPhase && !x.len().is_multiple_of(2) {
            return invalid(format!("two-phase transform needs an even length, got {}", x.len()));
        }
        if let Some(i) = x.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return invalid(format!("sample {i} is not finite"));
        }
        let mut input = take_dirty(self.n);
        input[..x.len()].copy_from_slice(x);
        input[x.len()..].fill(ZERO);
        Ok(FrftSession { engine: self, variant, len: x.len(), input, front: [None, None, None] })
    }

    pub fn transform(&self, x: &[Complex64], a: f64, variant: EngineVariant) -> Result<FrftResult> {
        self.session(x, variant)?.transform(a)
    }

    /// Band shift followed by the order-independent interpolation stage.
    fn front_end(&self, x: &[Complex64], shift: Shift, variant: EngineVariant, cost: &mut Cost) -> Vec<Complex64> {
        let n = self.n;
        let h2 = n / 2;
        // centred samples rotated so that position p sits at index p mod N
        let mut y = take_dirty(n);
        y.copy_from_slice(x);
        y.rotate_left(h2);
        if shift != Shift::None {
            // input and output both indexed mod N, so no rotation back
            cost.run(if shift == Shift::Forward { &self.fwd_n } else { &self.inv_n }, &mut y);
            let s = 1.0 / (n as f64).sqrt();
            y.iter_mut().for_each(|v| *v *= s);
        }
        match variant {
            EngineVariant::TwoPhase => {
                // x_odd(p) = x(p + 1/2) under band-limited interpolation
                let mut out = take_dirty(2 * n);
                out[..n].copy_from_slice(&y);
                cost.run(&self.fwd_n, &mut y);
                y.iter_mut().zip(&self.half_shift).for_each(|(v, t)| *v *= t);
                cost.run(&self.inv_n, &mut y);
                out[n..].copy_from_slice(&y);
                give([y]);
                out
            }
            EngineVariant::SinglePhase => {
                // zero-pad in frequency onto the 2N grid, Nyquist bin on the
                // negative side; output index n + N holds u(n)
                cost.run(&self.fwd_n, &mut y);
                let mut up = take_dirty(2 * n);
                up[..h2].copy_from_slice(&y[..h2]);
                up[h2..2 * n - h2].fill(ZERO);
                up[2 * n - h2..].copy_from_slice(&y[h2..]);
                cost.run(&self.inv_2n, &mut up);
                up.rotate_left(n);
                let s = 1.0 / n as f64;
                up.iter_mut().for_each(|v| *v *= s);
                give([y]);
                up
            }
        }
    }

    /// Chirp constants for order `b` in the stable band.
    fn chirps(&self, b: f64) -> (f64, f64, Complex64) {
        let alpha = b * PI / 2.0;
        let gamma = 1.0 / alpha.tan();
        let beta = 1.0 / alpha.sin();
        let scale = Complex64::new(1.0, -gamma).sqrt() / (2.0 * (self.n as f64).sqrt());
        (gamma - beta, beta, scale)
    }

    fn core_single(&self, u: &[Complex64], b: f64, cost: &mut Cost) -> Vec<Complex64> {
        let n = self.n;
        let (c_pre, c_conv, scale) = self.chirps(b);

        // v(m) = pre(m) u(m) for m in [-N, N), then full linear convolution
        // with h(d), d in [-(2N-1), 2N-1]
        let pre = chirp_half(c_pre, n, n);
        let kern = chirp_half(c_conv, n, 2 * n - 1);
        let big = 8 * n;
        let mut v = take_dirty(big);
        for (i, slot) in v[..2 * n].iter_mut().enumerate() {
            *slot = u[i] * pre[i.abs_diff(n)];
        }
        v[2 * n..].fill(ZERO);
        let mut h = take_dirty(big);
        for (i, slot) in h[..4 * n - 1].iter_mut().enumerate() {
            *slot = kern[i.abs_diff(2 * n - 1)];
        }
        h[4 * n - 1..].fill(ZERO);
        cost.run(&self.fwd_8n, &mut v);
        cost.run(&self.fwd_8n, &mut h);
        v.iter_mut().zip(&h).for_each(|(p, q)| *p *= q);
        cost.run(&self.inv_8n, &mut v);

        let norm = scale / big as f64;
        let out = (0..n).map(|k| norm * pre[(2 * k).abs_diff(n)] * v[2 * n - 1 + 2 * k]).collect();
        give([v, h, pre, kern]);
        out
    }

    fn core_two_phase(&self, front: &[Complex64], b: f64, cost: &mut Cost) -> Vec<Complex64> {
        let n = self.n;
        let h2 = n / 2;
        let m = 2 * n;
        let (c_pre, c_conv, scale) = self.chirps(b);
        let (even, odd) = front.split_at(n);

        // g_e(p) = pre(2p) x(p), g_o(p) = pre(2p + 1) x_odd(p), stored at p mod 2N;
        // pre is even in its argument so negative p read pre at |2p|, |2p + 1|
        let pre = chirp_half(c_pre, n, n);
        let mut ge = take_dirty(m);
        let mut go = take_dirty(m);
        for (p, ((e, o), (xe, xo))) in
            ge[..h2].iter_mut().zip(&mut go[..h2]).zip(even[..h2].iter().zip(&odd[..h2])).enumerate()
        {
            *e = pre[2 * p] * xe;
            *o = pre[2 * p + 1] * xo;
        }
        ge[h2..m - h2].fill(ZERO);
        go[h2..m - h2].fill(ZERO);
        // p = -q for q = h2, ..., 1
        for (i, ((e, o), (xe, xo))) in
            ge[m - h2..].iter_mut().zip(&mut go[m - h2..]).zip(even[h2..].iter().zip(&odd[h2..])).enumerate()
        {
            let q = h2 - i;
            *e = pre[2 * q] * xe;
            *o = pre[2 * q - 1] * xo;
        }

        // h_e(j) = h(2j), h_o(j) = h(2j - 1) for |j| < N; slot N stays empty
        let kern = chirp_half(c_conv, n, 2 * n - 1);
        let mut he = take_dirty(m);
        let mut ho = take_dirty(m);
        he[0] = kern[0];
        ho[0] = kern[1];
        for (j, (e, o)) in he[1..n].iter_mut().zip(&mut ho[1..n]).enumerate() {
            let d = 2 * (j + 1);
            *e = kern[d];
            *o = kern[d - 1];
        }
        // slot m - j holds j' = -j: h(-2j) = h(2j), h(-2j - 1) = h(2j + 1)
        for (i, (e, o)) in he[n + 1..].iter_mut().zip(&mut ho[n + 1..]).enumerate() {
            let d = 2 * (n - 1 - i);
            *e = kern[d];
            *o = kern[d + 1];
        }
        he[n] = ZERO;
        ho[n] = ZERO;
        give([kern]);

        cost.run(&self.fwd_2n, &mut ge);
        cost.run(&self.fwd_2n, &mut go);
        cost.run(&self.fwd_2n, &mut he);
        cost.run(&self.fwd_2n, &mut ho);
        for ((e, o), (a, b)) in ge.iter_mut().zip(&go).zip(he.iter().zip(&ho)) {
            *e = *e * a + o * b;
        }
        cost.run(&self.inv_2n, &mut ge);

        // output k covers q = k - N/2; q < 0 sits at slot 2N + q
        let norm = scale / m as f64;
        let mut out = Vec::with_capacity(n);
        out.extend(ge[m - h2..].iter().enumerate().map(|(i, z)| norm * pre[2 * (h2 - i)] * z));
        out.extend(ge[..h2].iter().enumerate().map(|(q, z)| norm * pre[2 * q] * z));
        give([ge, go, he, ho, pre]);
        out
    }
}

/// `exp(jπ·c·d²/(4N))` for `d = 0..=max_d`, in a pooled buffer.
///
/// With `d = B·b + t` the phase splits as `θ(Bb)² + 2θBbt + θt²`; the middle
/// factor is advanced by one multiplication per block for each `t`, which
/// keeps the inner loop free of trig calls and of long dependency chains.
fn chirp_half(c: f64, n: usize, max_d: usize) -> Vec<Complex64> {
    const B: usize = 64;
    let turns_per_d2 = c / (8.0 * n as f64);
    let at = |turns: f64| {
        let (s, co) = (2.0 * PI * turns.fract()).sin_cos();
        Complex64::new(co, s)
    };
    let mut t_sq = [ZERO; B];
    let mut step = [ZERO; B];
    for t in 0..B {
        t_sq[t] = at(turns_per_d2 * (t * t) as f64);
        step[t] = at(turns_per_d2 * (2 * B * t) as f64);
    }
    let mut cross = [Complex64::new(1.0, 0.0); B];
    let mut out = take_dirty(max_d + 1);
    for (block, chunk) in out.chunks_mut(B).enumerate() {
        let base = (block * B) as f64;
        let head = at(turns_per_d2 * base * base);
        for (((o, c), t), s) in chunk.iter_mut().zip(&mut cross).zip(&t_sq).zip(&step) {
            *o = head * (*c * t);
            *c *= s;
        }
    }
    out
}

/// Order-`a` transform with the single-phase engine.
pub fn frft(x: &IqBuffer, a: f64) -> Result<FrftResult> {
    FrftEngine::cached(x.len())?.transform(x.samples(), a, EngineVariant::SinglePhase)
}

/// Order-`a` transform with the even/odd two-phase engine.
pub fn frft_two_phase(x: &IqBuffer, a: f64) -> Result<FrftResult> {
    FrftEngine::cached(x.len())?.transform(x.samples(), a, EngineVariant::TwoPhase)
}
