//! Boundary datum g and its tangential-derivative measure.
//!
//! g is continuous and piecewise linear in arclength; the signed measure of
//! its increments is queried exactly from the breakpoint table, never by
//! quadrature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundaryArc;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace needs at least one breakpoint")]
    Empty,
    #[error("breakpoint {0} out of range [0, {1})")]
    OutOfRange(f64, f64),
    #[error("non-finite breakpoint value")]
    NonFinite,
    #[error("jump at arclength {0}: duplicate breakpoint with different values")]
    Jump(f64),
    #[error("empty measure: requested sign has no mass")]
    EmptyMeasure,
    #[error("sample count must be at least 1")]
    BadSampleCount,
    #[error("singular-continuous trace unsupported: {0}")]
    SingularContinuous(String),
}

/// Continuous piecewise-linear boundary function, periodic in arclength.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceFunction {
    /// Sorted (arclength, value); interpolation wraps from the last
    /// breakpoint back to the first.
    breakpoints: Vec<(f64, f64)>,
    total_len: f64,
}

impl TraceFunction {
    pub fn from_breakpoints(
        mut bk: Vec<(f64, f64)>,
        total_len: f64,
    ) -> Result<Self, TraceError> {
        if bk.is_empty() {
            return Err(TraceError::Empty);
        }
        for &(s, v) in &bk {
            if !s.is_finite() || !v.is_finite() {
                return Err(TraceError::NonFinite);
            }
            if !(0.0..total_len).contains(&s) {
                return Err(TraceError::OutOfRange(s, total_len));
            }
        }
        bk.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(bk.len());
        for (s, v) in bk {
            if let Some(&(ps, pv)) = dedup.last() {
                if (s - ps).abs() < 1e-12 * total_len.max(1.0) {
                    if (v - pv).abs() > 1e-12 {
                        return Err(TraceError::Jump(s));
                    }
                    continue;
                }
            }
            dedup.push((s, v));
        }
        Ok(TraceFunction {
            breakpoints: dedup,
            total_len,
        })
    }

    pub fn constant(value: f64, total_len: f64) -> Self {
        TraceFunction {
            breakpoints: vec![(0.0, value)],
            total_len,
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }
    pub fn total_len(&self) -> f64 {
        self.total_len
    }

    fn wrap(&self, s: f64) -> f64 {
        let mut s = s % self.total_len;
        if s < 0.0 {
            s += self.total_len;
        }
        s
    }

    /// Index of the breakpoint cell containing `s`, plus cell geometry
    /// (start s, length, start value, increment).
    fn cell_of(&self, s: f64) -> (usize, f64, f64, f64, f64) {
        let n = self.breakpoints.len();
        let s = self.wrap(s);
        let first = self.breakpoints[0].0;
        // sigma lives in [first, first + L)
        let sigma = if s < first { s + self.total_len } else { s };
        let idx = match self
            .breakpoints
            .binary_search_by(|&(bs, _)| bs.partial_cmp(&sigma).unwrap())
        {
            Ok(i) => i,
            Err(0) => n - 1, // sigma >= first by construction, unreachable
            Err(i) => i - 1,
        };
        let (s0, v0) = self.breakpoints[idx];
        let (s1, v1) = if idx + 1 < n {
            self.breakpoints[idx + 1]
        } else {
            let (fs, fv) = self.breakpoints[0];
            (fs + self.total_len, fv)
        };
        (idx, s0, (s1 - s0).max(1e-300), v0, v1 - v0)
    }

    /// Cell geometry by index: (cell length, value increment over the cell).
    fn cell_by_index(&self, idx: usize) -> (f64, f64) {
        let n = self.breakpoints.len();
        let (s0, v0) = self.breakpoints[idx];
        let (s1, v1) = if idx + 1 < n {
            self.breakpoints[idx + 1]
        } else {
            let (fs, fv) = self.breakpoints[0];
            (fs + self.total_len, fv)
        };
        ((s1 - s0).max(1e-300), v1 - v0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        if self.breakpoints.len() == 1 {
            return self.breakpoints[0].1;
        }
        let s = self.wrap(s);
        let first = self.breakpoints[0].0;
        let sigma = if s < first { s + self.total_len } else { s };
        let (_, s0, len, v0, dv) = self.cell_of(s);
        v0 + dv * ((sigma - s0) / len)
    }

    /// Largest absolute slope: a Lipschitz bound for g in arclength.
    pub fn lipschitz_bound(&self) -> f64 {
        let n = self.breakpoints.len();
        if n < 2 {
            return 0.0;
        }
        (0..n)
            .map(|i| {
                let (s0, v0) = self.breakpoints[i];
                let (s1, v1) = if i + 1 < n {
                    self.breakpoints[i + 1]
                } else {
                    let (fs, fv) = self.breakpoints[0];
                    (fs + self.total_len, fv)
                };
                ((v1 - v0) / (s1 - s0)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Maximal open arcs where g strictly increases / decreases / stays constant.
#[derive(Clone, Debug, Default)]
pub struct MonotoneDecomposition {
    pub increasing: Vec<BoundaryArc>,
    pub decreasing: Vec<BoundaryArc>,
    pub flat: Vec<BoundaryArc>,
}

/// The tangential-derivative measure f of a trace function, with cached
/// cumulative tables and monotone decomposition.
#[derive(Clone, Debug)]
pub struct SignedBoundaryMeasure {
    trace: TraceFunction,
    /// cumulative |f|, f+ and f- at breakpoints, anchored at the first one
    cum_tv: Vec<f64>,
    cum_pos: Vec<f64>,
    cum_neg: Vec<f64>,
    monotone: MonotoneDecomposition,
}

pub fn tangential_derivative(g: &TraceFunction) -> SignedBoundaryMeasure {
    SignedBoundaryMeasure::new(g.clone())
}

impl SignedBoundaryMeasure {
    pub fn new(trace: TraceFunction) -> Self {
        let n = trace.breakpoints.len();
        let l = trace.total_len;
        let mut cum_tv = vec![0.0; n + 1];
        let mut cum_pos = vec![0.0; n + 1];
        let mut cum_neg = vec![0.0; n + 1];
        // flat means zero slope at working precision: increments below this
        // relative threshold classify as constant (the cumulative tables keep
        // the exact values either way)
        let range = trace
            .breakpoints
            .iter()
            .map(|b| b.1)
            .fold(f64::NEG_INFINITY, f64::max)
            - trace
                .breakpoints
                .iter()
                .map(|b| b.1)
                .fold(f64::INFINITY, f64::min);
        let flat_tol = 1e-12 * range.max(1e-300);
        // cyclic cells: (sign, start, len)
        let mut cells: Vec<(i8, f64, f64)> = Vec::with_capacity(n);
        for i in 0..n {
            let (s0, v0) = trace.breakpoints[i];
            let (s1, v1) = if i + 1 < n {
                trace.breakpoints[i + 1]
            } else {
                let (fs, fv) = trace.breakpoints[0];
                (fs + l, fv)
            };
            let dv = v1 - v0;
            cum_tv[i + 1] = cum_tv[i] + dv.abs();
            cum_pos[i + 1] = cum_pos[i] + dv.max(0.0);
            cum_neg[i + 1] = cum_neg[i] + (-dv).max(0.0);
            let sign = if dv > flat_tol {
                1
            } else if dv < -flat_tol {
                -1
            } else {
                0
            };
            cells.push((sign, s0, s1 - s0));
        }
        if n == 1 {
            cells = vec![(0, trace.breakpoints[0].0, l)];
        }

        // merge consecutive equal-sign cells, cyclically
        let mut merged: Vec<(i8, f64, f64)> = Vec::new();
        for &(sign, s, len) in &cells {
            if let Some(last) = merged.last_mut() {
                if last.0 == sign {
                    last.2 += len;
                    continue;
                }
            }
            merged.push((sign, s, len));
        }
        if merged.len() > 1 && merged[0].0 == merged.last().unwrap().0 {
            let (_, s, len) = merged.pop().unwrap();
            merged[0].1 = s;
            merged[0].2 += len;
        }

        let mut monotone = MonotoneDecomposition::default();
        for (sign, s, len) in merged {
            let arc = BoundaryArc::new(trace_wrap(s, l), len.min(l));
            match sign {
                1 => monotone.increasing.push(arc),
                -1 => monotone.decreasing.push(arc),
                _ => monotone.flat.push(arc),
            }
        }
        SignedBoundaryMeasure {
            trace,
            cum_tv,
            cum_pos,
            cum_neg,
            monotone,
        }
    }

    pub fn trace(&self) -> &TraceFunction {
        &self.trace
    }
    pub fn total_len(&self) -> f64 {
        self.trace.total_len
    }
    pub fn monotone_decomposition(&self) -> &MonotoneDecomposition {
        &self.monotone
    }

    pub fn total_tv(&self) -> f64 {
        *self.cum_tv.last().unwrap()
    }
    /// Total positive mass f+(boundary).
    pub fn total_pos(&self) -> f64 {
        *self.cum_pos.last().unwrap()
    }
    pub fn total_neg(&self) -> f64 {
        *self.cum_neg.last().unwrap()
    }

    /// Cumulative value of the chosen table at arclength `s`, measured from
    /// the first breakpoint along orientation.
    fn cum_at(&self, table: &[f64], s: f64) -> f64 {
        if self.trace.breakpoints.len() == 1 {
            return 0.0;
        }
        let (idx, s0, len, _, _) = self.trace.cell_of(s);
        let first = self.trace.breakpoints[0].0;
        let s = self.trace.wrap(s);
        let sigma = if s < first {
            s + self.trace.total_len
        } else {
            s
        };
        let frac = ((sigma - s0) / len).clamp(0.0, 1.0);
        table[idx] + (table[idx + 1] - table[idx]) * frac
    }

    fn arc_weight(&self, table: &[f64], arc: &BoundaryArc) -> f64 {
        let total = *table.last().unwrap();
        let l = self.trace.total_len;
        if arc.len >= l - 1e-12 * l {
            return total;
        }
        let a = self.cum_at(table, arc.start);
        let b = self.cum_at(table, arc.end(l));
        // anchored coordinates tell whether the arc passes the anchor
        let first = self.trace.breakpoints[0].0;
        let sig = |s: f64| {
            let s = self.trace.wrap(s);
            if s < first {
                s + l
            } else {
                s
            }
        };
        if sig(arc.end(l)) < sig(arc.start) {
            total - (a - b)
        } else {
            b - a
        }
    }

    /// Net measure of the open arc taken in positive orientation.
    pub fn measure_of_arc(&self, arc: &BoundaryArc) -> f64 {
        let l = self.trace.total_len;
        if arc.len >= l - 1e-12 * l {
            return 0.0;
        }
        self.trace.eval(arc.end(l)) - self.trace.eval(arc.start)
    }

    /// Total variation of g over the arc.
    pub fn tv_of_arc(&self, arc: &BoundaryArc) -> f64 {
        self.arc_weight(&self.cum_tv, arc)
    }
    pub fn pos_of_arc(&self, arc: &BoundaryArc) -> f64 {
        self.arc_weight(&self.cum_pos, arc)
    }
    pub fn neg_of_arc(&self, arc: &BoundaryArc) -> f64 {
        self.arc_weight(&self.cum_neg, arc)
    }

    /// TV of g over a window of half-width `eps` around `s`.
    pub fn tv_window(&self, s: f64, eps: f64) -> f64 {
        let arc = BoundaryArc::new(trace_wrap(s - eps, self.trace.total_len), 2.0 * eps);
        self.tv_of_arc(&arc)
    }

    /// Equal-mass atoms at TV-quantile midpoints of f+ or f-.
    ///
    /// Returns (arclength, mass) pairs in quantile order; masses sum to the
    /// full signed mass.
    pub fn inverse_cdf_sample(&self, positive: bool, n: usize) -> Result<Vec<(f64, f64)>, TraceError> {
        if n == 0 {
            return Err(TraceError::BadSampleCount);
        }
        let table = if positive { &self.cum_pos } else { &self.cum_neg };
        let total = *table.last().unwrap();
        if total <= 0.0 {
            return Err(TraceError::EmptyMeasure);
        }
        let mass = total / n as f64;
        let mut out = Vec::with_capacity(n);
        let l = self.trace.total_len;
        for k in 0..n {
            let q = total * (k as f64 + 0.5) / n as f64;
            let s = self.invert_cum(table, q);
            out.push((trace_wrap(s, l), mass));
        }
        Ok(out)
    }

    /// Arclength where the cumulative table reaches `q`.
    pub(crate) fn invert_cum(&self, table: &[f64], q: f64) -> f64 {
        let n = self.trace.breakpoints.len();
        let l = self.trace.total_len;
        // first cell whose end-cumulative exceeds q with positive weight
        let mut idx = match table.binary_search_by(|c| c.partial_cmp(&q).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        while idx + 1 < table.len() && table[idx + 1] <= q {
            idx += 1;
        }
        while idx > 0 && table[idx] > q {
            idx -= 1;
        }
        let w = table[idx + 1] - table[idx];
        let (s0, _) = self.trace.breakpoints[idx];
        let s1 = if idx + 1 < n {
            self.trace.breakpoints[idx + 1].0
        } else {
            self.trace.breakpoints[0].0 + l
        };
        if w <= 0.0 {
            return s0;
        }
        s0 + (s1 - s0) * ((q - table[idx]) / w)
    }

    /// Cumulative positive (or negative) mass from the anchor breakpoint to `s`.
    pub fn signed_cum(&self, positive: bool, s: f64) -> f64 {
        let table = if positive { &self.cum_pos } else { &self.cum_neg };
        self.cum_at(table, s)
    }

    /// Distance from the start of `arc` at which the TV of g accumulated
    /// along the arc first reaches `tv`. Clamped to [0, arc.len].
    pub fn offset_at_tv(&self, arc: &BoundaryArc, tv: f64) -> f64 {
        if tv <= 0.0 {
            return 0.0;
        }
        let n = self.trace.breakpoints.len();
        if n == 1 {
            return arc.len;
        }
        let l = self.trace.total_len;
        let s = trace_wrap(arc.start, l);
        let (mut idx, s0, cell_len, _, mut dv) = self.trace.cell_of(s);
        let first = self.trace.breakpoints[0].0;
        let sigma = if s < first { s + l } else { s };
        let mut pos_in_cell = (sigma - s0).clamp(0.0, cell_len);
        let mut cur_len = cell_len;
        let mut done = 0.0;
        let mut acc = 0.0;
        for _ in 0..(2 * n + 4) {
            let room = cur_len - pos_in_cell;
            let step = room.min(arc.len - done);
            let rate = dv.abs() / cur_len;
            let w = rate * step;
            if acc + w >= tv && rate > 0.0 {
                return (done + (tv - acc) / rate).min(arc.len);
            }
            acc += w;
            done += step;
            if done >= arc.len {
                return arc.len;
            }
            idx = (idx + 1) % n;
            let (len2, dv2) = self.trace.cell_by_index(idx);
            cur_len = len2;
            dv = dv2;
            pos_in_cell = 0.0;
        }
        arc.len
    }
}

fn trace_wrap(s: f64, l: f64) -> f64 {
    let mut s = s % l;
    if s < 0.0 {
        s += l;
    }
    s
}
