//! Adaptive Dormand–Prince 5(4) integrator with continuous output and
//! event localization by bisection on the interpolant.

use std::fmt;

/// Failure to evaluate a right-hand side at a stage point. The step is
/// rejected and retried with a smaller step size.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsFailure(pub String);

impl fmt::Display for RhsFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, s: f64, y: &[f64; N]) -> Result<[f64; N], RhsFailure>;

    /// Upper bound on |h| at state `y`, for systems with a known fast mode.
    fn step_limit(&self, _y: &[f64; N]) -> f64 {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Bisection stops once the bracket is shorter than this.
    pub event_tol: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: None,
            h_max: 1.0,
            max_steps: 2_000_000,
            event_tol: 1e-10,
        }
    }
}

impl StepOptions {
    pub fn with_tol(tol: f64) -> Self {
        StepOptions {
            rtol: tol,
            atol: tol,
            ..StepOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

impl Crossing {
    fn matches(self, before: f64, after: f64) -> bool {
        let rising = before < 0.0 && after >= 0.0;
        let falling = before > 0.0 && after <= 0.0;
        match self {
            Crossing::Rising => rising,
            Crossing::Falling => falling,
            Crossing::Either => rising || falling,
        }
    }
}

type EventFn<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>;
type GuardFn<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> bool + 'a>;

/// A scalar event function `g(s, y)` whose zero crossings are located.
pub struct Event<'a, L, const N: usize> {
    pub label: L,
    pub terminal: bool,
    pub crossing: Crossing,
    function: EventFn<'a, N>,
    guard: Option<GuardFn<'a, N>>,
}

impl<'a, L, const N: usize> Event<'a, L, N> {
    pub fn new(label: L, crossing: Crossing, function: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Event {
            label,
            terminal: false,
            crossing,
            function: Box::new(function),
            guard: None,
        }
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    /// Crossings where the guard is false at the located root are ignored.
    pub fn guarded(mut self, guard: impl Fn(f64, &[f64; N]) -> bool + 'a) -> Self {
        self.guard = Some(Box::new(guard));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventHit<L, const N: usize> {
    pub label: L,
    pub s: f64,
    pub y: [f64; N],
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunEnd<L> {
    /// Reached the requested endpoint.
    Reached,
    Terminal(L),
    /// The controller could not find an acceptable step.
    StepFailure {
        s: f64,
        h: f64,
    },
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct OdeRun<L, const N: usize> {
    /// Accepted step endpoints, starting with the initial condition. A
    /// terminal event replaces the last step endpoint with the event state.
    pub steps: Vec<(f64, [f64; N])>,
    pub events: Vec<EventHit<L, N>>,
    pub end: RunEnd<L>,
    pub rejected: usize,
}

impl<L, const N: usize> OdeRun<L, N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        *self.steps.last().expect("run has the initial state")
    }
}

/// Continuous extension of one accepted step (fourth order).
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    s0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, s: f64) -> [f64; N] {
        let th = (s - self.s0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.r;
            *o = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

struct Attempt<const N: usize> {
    y1: [f64; N],
    k7: [f64; N],
    err: f64,
    dense: DenseStep<N>,
}

fn attempt<S: OdeSystem<N> + ?Sized, const N: usize>(
    sys: &S,
    s: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    opts: &StepOptions,
) -> Result<Attempt<N>, RhsFailure> {
    let k2 = sys.rhs(s + C2 * h, &combo(y, h, &[(A21, k1)]))?;
    let k3 = sys.rhs(s + C3 * h, &combo(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = sys.rhs(s + C4 * h, &combo(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = sys.rhs(
        s + C5 * h,
        &combo(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = sys.rhs(
        s + h,
        &combo(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y1 = combo(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = sys.rhs(s + h, &y1)?;

    let mut sum = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
        sum += (e / sc).powi(2);
    }
    let err = (sum / N as f64).sqrt();
    if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
        return Err(RhsFailure("non-finite step".into()));
    }

    let mut r = [[0.0; N]; 5];
    for i in 0..N {
        let ydiff = y1[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        r[0][i] = y[i];
        r[1][i] = ydiff;
        r[2][i] = bspl;
        r[3][i] = ydiff - h * k7[i] - bspl;
        r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Ok(Attempt {
        y1,
        k7,
        err,
        dense: DenseStep { s0: s, h, r },
    })
}

fn initial_step<S: OdeSystem<N> + ?Sized, const N: usize>(
    sys: &S,
    s: f64,
    y: &[f64; N],
    f0: &[f64; N],
    opts: &StepOptions,
) -> f64 {
    let scale = |i: usize| opts.atol + opts.rtol * y[i].abs();
    let rms = |v: &[f64; N]| (v.iter().enumerate().map(|(i, x)| (x / scale(i)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.h_max);
    let y1 = combo(y, h0, &[(1.0, f0)]);
    let h1 = match sys.rhs(s + h0, &y1) {
        Ok(f1) => {
            let mut diff = [0.0; N];
            for i in 0..N {
                diff[i] = f1[i] - f0[i];
            }
            let d2 = rms(&diff) / h0;
            let m = d1.max(d2);
            if m <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / m).powf(0.2)
            }
        }
        Err(_) => h0 * 1e-2,
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}

/// Locate a root of the event function on the interpolant of one step.
fn bisect<const N: usize>(
    dense: &DenseStep<N>,
    g: &dyn Fn(f64, &[f64; N]) -> f64,
    mut a: f64,
    mut ga: f64,
    mut b: f64,
    tol: f64,
) -> f64 {
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m, &dense.eval(m));
        if (gm <= 0.0) == (ga <= 0.0) && gm != 0.0 {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    b
}

/// Integrate from `s0` to `s_end` (either direction).
pub fn integrate<S, L, const N: usize>(
    sys: &S,
    s0: f64,
    y0: [f64; N],
    s_end: f64,
    opts: &StepOptions,
    events: &[Event<'_, L, N>],
) -> OdeRun<L, N>
where
    S: OdeSystem<N> + ?Sized,
    L: Clone,
{
    let mut run = OdeRun {
        steps: vec![(s0, y0)],
        events: Vec::new(),
        end: RunEnd::Reached,
        rejected: 0,
    };
    let dir = if s_end >= s0 { 1.0 } else { -1.0 };
    let mut s = s0;
    let mut y = y0;
    if s == s_end {
        return run;
    }
    let mut k1 = match sys.rhs(s, &y) {
        Ok(k) => k,
        Err(_) => {
            run.end = RunEnd::StepFailure { s, h: 0.0 };
            return run;
        }
    };
    let mut h = opts.h_init.unwrap_or_else(|| initial_step(sys, s, &y, &k1, opts)).abs() * dir;
    let mut last_rejected = false;

    for _ in 0..opts.max_steps {
        let remaining = s_end - s;
        if remaining * dir <= 0.0 {
            return run;
        }
        let limit = opts.h_max.min(sys.step_limit(&y));
        let mut h_try = h.abs().min(limit).min(remaining.abs()) * dir;
        let last_step = h_try.abs() >= remaining.abs();
        if last_step {
            h_try = remaining;
        }
        let h_min = 1e-14 * s.abs().max(1.0);
        if h_try.abs() < h_min {
            run.end = RunEnd::StepFailure { s, h: h_try };
            return run;
        }

        let outcome = attempt(sys, s, &y, &k1, h_try, opts);
        let att = match outcome {
            Ok(a) if a.err <= 1.0 => a,
            Ok(a) => {
                run.rejected += 1;
                let fac = (0.9 * a.err.powf(-0.2)).clamp(0.2, 1.0);
                h = h_try * fac;
                last_rejected = true;
                continue;
            }
            Err(_) => {
                run.rejected += 1;
                h = h_try * 0.25;
                last_rejected = true;
                continue;
            }
        };

        let s_new = if last_step { s_end } else { s + h_try };
        // event scan on the accepted step
        let mut hits: Vec<EventHit<L, N>> = Vec::new();
        for ev in events {
            let g0 = (ev.function)(s, &y);
            let g1 = (ev.function)(s_new, &att.y1);
            if !ev.crossing.matches(g0, g1) {
                continue;
            }
            let root = bisect(&att.dense, &*ev.function, s, g0, s_new, opts.event_tol);
            let y_root = if root == s_new { att.y1 } else { att.dense.eval(root) };
            if let Some(guard) = &ev.guard {
                if !guard(root, &y_root) {
                    continue;
                }
            }
            hits.push(EventHit {
                label: ev.label.clone(),
                s: root,
                y: y_root,
                terminal: ev.terminal,
            });
        }
        hits.sort_by(|a, b| ((a.s - s) * dir).total_cmp(&((b.s - s) * dir)));
        if let Some(pos) = hits.iter().position(|e| e.terminal) {
            hits.truncate(pos + 1);
            let term = hits[pos].clone();
            run.events.extend(hits);
            if term.s != s {
                run.steps.push((term.s, term.y));
            }
            run.end = RunEnd::Terminal(term.label);
            return run;
        }
        run.events.extend(hits);

        s = s_new;
        y = att.y1;
        k1 = att.k7;
        run.steps.push((s, y));
        if last_step {
            return run;
        }
        let mut fac = 0.9 * att.err.max(1e-10).powf(-0.2);
        fac = fac.clamp(0.2, if last_rejected { 1.0 } else { 10.0 });
        h = h_try * fac;
        last_rejected = false;
    }
    run.end = RunEnd::MaxSteps;
    run
}

/// Integrate while keeping the dense interpolants of every accepted step.
pub fn integrate_dense<S, const N: usize>(
    sys: &S,
    s0: f64,
    y0: [f64; N],
    s_end: f64,
    opts: &StepOptions,
) -> (OdeRun<(), N>, Vec<DenseStep<N>>)
where
    S: OdeSystem<N> + ?Sized,
{
    struct Recorder<'a, S: ?Sized, const N: usize> {
        inner: &'a S,
    }
    impl<S: OdeSystem<N> + ?Sized, const N: usize> OdeSystem<N> for Recorder<'_, S, N> {
        fn rhs(&self, s: f64, y: &[f64; N]) -> Result<[f64; N], RhsFailure> {
            self.inner.rhs(s, y)
        }
        fn step_limit(&self, y: &[f64; N]) -> f64 {
            self.inner.step_limit(y)
        }
    }
    let run = integrate::<_, (), N>(&Recorder { inner: sys }, s0, y0, s_end, opts, &[]);
    // Rebuild the interpolants from the accepted steps; one extra attempt per step.
    let mut dense = Vec::with_capacity(run.steps.len());
    for w in run.steps.windows(2) {
        let (sa, ya) = w[0];
        let (sb, _) = w[1];
        if let Ok(k1) = sys.rhs(sa, &ya) {
            if let Ok(a) = attempt(sys, sa, &ya, &k1, sb - sa, opts) {
                dense.push(a.dense);
            }
        }
    }
    (run, dense)
}
