//! Resettable stochastic clocks: discretised renewal processes whose timer
//! restarts on a reset stimulus, and precision sweeps over their bin width.
//!
//! Stimulus 0 means *continue* and 1 means *reset*; action 1 is a tick.
//! State `s_n` counts steps since the last tick or reset.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::encoding::{recursion_residual, OverlapTable, Variant};
use crate::entropy::{shannon_bits, weighted_gram_entropy_bits};
use crate::linalg::Matrix;
use crate::{Error, InputStrategy, Result, Strategy};

/// Survival below this counts as zero.
pub const SURVIVAL_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RenewalFamily {
    /// Interval uniform on `[0, τ)`.
    Uniform { tau: f64 },
    /// Memoryless intervals with the given rate; a single state.
    Exponential { rate: f64 },
    /// Bin probabilities given directly.
    Explicit,
}

/// Discretised renewal process: per-bin event probabilities `φ̄(n)` and
/// survival `Φ(n) = Σ_{k≥n} φ̄(k)` for `n < N`. Past the last state the
/// process is memoryless with hazard `tail_hazard` (1 for finite support).
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalSpec {
    pub family: RenewalFamily,
    pub dt: f64,
    pub pmf: Vec<f64>,
    pub survival: Vec<f64>,
    pub tail_hazard: f64,
}

impl RenewalSpec {
    /// Uniform interval on `[0, τ)` in bins of width `dt`; `τ/dt` must be
    /// an integer.
    pub fn uniform(tau: f64, dt: f64) -> Result<Self> {
        if !(tau > 0.0 && dt > 0.0) {
            return Err(Error::InvalidRenewal { reason: "tau and dt must be positive".into() });
        }
        let ratio = tau / dt;
        let n = libm::round(ratio);
        if n < 1.0 || libm::fabs(ratio - n) > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidRenewal { reason: format!("tau/dt = {ratio} is not a positive integer") });
        }
        let n = n as usize;
        let pmf = vec![1.0 / n as f64; n];
        let survival = (0..n).map(|k| (n - k) as f64 / n as f64).collect();
        Ok(Self { family: RenewalFamily::Uniform { tau }, dt, pmf, survival, tail_hazard: 1.0 })
    }

    /// Memoryless process firing with probability `1 − e^{−rate·dt}` per
    /// step. Rate 0 never fires.
    pub fn exponential(rate: f64, dt: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite() && dt > 0.0) {
            return Err(Error::InvalidRenewal { reason: "rate must be finite and nonnegative, dt positive".into() });
        }
        let q = -libm::expm1(-rate * dt);
        Ok(Self { family: RenewalFamily::Exponential { rate }, dt, pmf: vec![q], survival: vec![1.0], tail_hazard: q })
    }

    /// Finite pmf over bins. Every bin must survive with probability at
    /// least [`SURVIVAL_CUTOFF`].
    pub fn explicit(pmf: Vec<f64>, dt: f64) -> Result<Self> {
        if pmf.is_empty() || !(dt > 0.0) {
            return Err(Error::InvalidRenewal { reason: "need at least one bin and positive dt".into() });
        }
        if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidRenewal { reason: "bin probabilities must be nonnegative".into() });
        }
        let total: f64 = pmf.iter().sum();
        if libm::fabs(total - 1.0) > crate::PROB_TOL {
            return Err(Error::InvalidRenewal { reason: format!("bin probabilities sum to {total}") });
        }
        let pmf: Vec<f64> = pmf.iter().map(|p| p / total).collect();
        let mut survival = vec![0.0; pmf.len()];
        let mut acc = 0.0;
        for k in (0..pmf.len()).rev() {
            acc += pmf[k];
            survival[k] = acc;
        }
        if let Some(index) = survival.iter().position(|&s| s < SURVIVAL_CUTOFF) {
            return Err(Error::DegenerateSurvival { index });
        }
        Ok(Self { family: RenewalFamily::Explicit, dt, pmf, survival, tail_hazard: 1.0 })
    }

    /// As [`RenewalSpec::explicit`] after dropping trailing bins whose
    /// survival is below the cutoff.
    pub fn explicit_trimmed(mut pmf: Vec<f64>, dt: f64) -> Result<Self> {
        let mut tail = 0.0;
        while let Some(&last) = pmf.last() {
            if pmf.len() > 1 && tail + last < SURVIVAL_CUTOFF {
                tail += last;
                pmf.pop();
            } else {
                break;
            }
        }
        Self::explicit(pmf, dt)
    }

    /// Number of clock states `N`.
    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    /// Probability of firing in step `n` given survival to `n`.
    pub fn hazard(&self, n: usize) -> f64 {
        if n + 1 >= self.len() {
            self.tail_hazard
        } else {
            (self.pmf[n] / self.survival[n]).min(1.0)
        }
    }

    /// `Φ(n)` for any `n ≥ 0`, extending geometrically past the last state.
    pub fn survival_at(&self, n: usize) -> f64 {
        let last = self.len() - 1;
        if n <= last {
            self.survival[n]
        } else {
            self.survival[last] * libm::pow(1.0 - self.tail_hazard, (n - last) as f64)
        }
    }

    /// `φ̄(n) = Φ(n) − Φ(n+1)` for any `n ≥ 0`.
    pub fn pmf_at(&self, n: usize) -> f64 {
        if n + 1 < self.len() {
            self.pmf[n]
        } else {
            self.survival_at(n) * self.tail_hazard
        }
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

fn binary() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

/// Successor of state `n` when the clock does not tick.
fn advance(n: usize, len: usize) -> usize {
    (n + 1).min(len - 1)
}

/// Clock agent: on continue, tick with the hazard and return to `s_0`, else
/// advance; on reset, stay silent and return to `s_0`.
pub fn build_clock_strategy(spec: &RenewalSpec) -> Result<Strategy> {
    let n = spec.len();
    let mut emission = vec![0.0; n * 4];
    let mut update = vec![None; n * 4];
    for s in 0..n {
        let h = spec.hazard(s);
        let base = s * 4;
        // x = 0
        emission[base] = 1.0 - h;
        emission[base + 1] = h;
        if 1.0 - h > 0.0 {
            update[base] = Some(advance(s, n));
        }
        if h > 0.0 {
            update[base + 1] = Some(0);
        }
        // x = 1
        emission[base + 2] = 1.0;
        update[base + 2] = Some(0);
    }
    Strategy::new(binary(), binary(), labels("s", n), emission, update)
}

/// Input process that resets the clock with the hazard of `spec` and whose
/// own timer restarts whenever either process fires.
pub fn reset_input_strategy(spec: &RenewalSpec) -> Result<InputStrategy> {
    let m = spec.len();
    let mut emission = vec![0.0; m * 2];
    let mut update = vec![None; m * 4];
    for r in 0..m {
        let h = spec.hazard(r);
        emission[r * 2] = 1.0 - h;
        emission[r * 2 + 1] = h;
        let base = r * 4;
        update[base] = Some(advance(r, m));
        update[base + 1] = Some(0);
        update[base + 2] = Some(0);
        update[base + 3] = Some(0);
    }
    InputStrategy::new(binary(), binary(), labels("r", m), emission, update)
}

fn check_dt(a: &RenewalSpec, b: &RenewalSpec) -> Result<()> {
    if libm::fabs(a.dt - b.dt) > 1e-12 * a.dt.max(b.dt) {
        return Err(Error::InvalidArgument { reason: format!("timesteps differ: {} vs {}", a.dt, b.dt) });
    }
    Ok(())
}

/// Steady state `P(n) ∝ Φ_I(n δt) Φ_O(n δt)` of the clock driven by the
/// reset input, with the memoryless tail folded into the last state.
pub fn clock_stationary_distribution(input: &RenewalSpec, output: &RenewalSpec) -> Result<Vec<f64>> {
    check_dt(input, output)?;
    let n = output.len();
    let mut p: Vec<f64> = (0..n).map(|k| input.survival_at(k) * output.survival_at(k)).collect();
    if output.tail_hazard < 1.0 {
        // Geometric tail beyond the last state.
        let mut k = n;
        loop {
            let term = input.survival_at(k) * output.survival_at(k);
            p[n - 1] += term;
            k += 1;
            if term <= 1e-18 * p[n - 1] {
                break;
            }
            if k > n + 100_000_000 {
                return Err(Error::InvalidRenewal { reason: "clock never ticks or resets".into() });
            }
        }
    }
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    Ok(p)
}

/// Memory-state overlaps of the clock agent. The infinite-horizon variant
/// solves `c_tt' = √(h_t h_t') + √((1−h_t)(1−h_t')) c_{t+1,t'+1}` backwards
/// from the last state; the baseline replaces the tail by `δ_{t+1,t'+1}`.
pub fn clock_overlap_matrix(spec: &RenewalSpec, variant: Variant) -> Matrix {
    let n = spec.len();
    let h: Vec<f64> = (0..n).map(|k| spec.hazard(k)).collect();
    let sh: Vec<f64> = h.iter().map(|v| libm::sqrt(*v)).collect();
    let sg: Vec<f64> = h.iter().map(|v| libm::sqrt(1.0 - *v)).collect();
    let mut c = Matrix::identity(n);
    for t in (0..n).rev() {
        for u in ((t + 1)..n).rev() {
            let (a, b) = (advance(t, n), advance(u, n));
            let tail = match variant {
                Variant::QInf => c[(a.min(b), a.max(b))],
                Variant::Q1 => {
                    if a == b {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            let v = sh[t] * sh[u] + sg[t] * sg[u] * tail;
            c[(t, u)] = v;
        }
    }
    for t in 0..n {
        for u in (t + 1)..n {
            c[(u, t)] = c[(t, u)];
        }
    }
    c
}

/// Overlap table of the clock agent; reset overlaps are identically 1.
pub fn clock_overlaps(spec: &RenewalSpec, variant: Variant) -> Result<OverlapTable> {
    let strategy = build_clock_strategy(spec)?;
    let c0 = clock_overlap_matrix(spec, variant);
    let n = spec.len();
    let mut table = OverlapTable::from_parts(variant, vec![c0.clone(), Matrix::filled(n, n, 1.0)], c0);
    table.residual = recursion_residual(&strategy, &table);
    Ok(table)
}

/// A family of clocks indexed by precision `n`.
pub trait ClockFamily: Sync {
    fn output(&self, n: u32) -> Result<RenewalSpec>;
    fn input(&self, n: u32) -> Result<RenewalSpec>;
    /// Width used to turn state probabilities into densities.
    fn bin_width(&self, n: u32) -> f64;
    /// State at precision `n − 1` containing state `k` at precision `n`.
    fn coarse_index(&self, k: usize) -> usize {
        k >> 1
    }
}

/// Uniform clock on `[0, τ)` with memoryless resets at `reset_rate`,
/// binned at `δt = τ / 2^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformReset {
    pub tau: f64,
    pub reset_rate: f64,
}

impl UniformReset {
    fn dt(&self, n: u32) -> f64 {
        self.tau / libm::ldexp(1.0, n as i32)
    }
}

impl ClockFamily for UniformReset {
    fn output(&self, n: u32) -> Result<RenewalSpec> {
        RenewalSpec::uniform(self.tau, self.dt(n))
    }
    fn input(&self, n: u32) -> Result<RenewalSpec> {
        RenewalSpec::exponential(self.reset_rate, self.dt(n))
    }
    fn bin_width(&self, n: u32) -> f64 {
        self.dt(n)
    }
}

/// Clock that ticks every step at every precision.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstantClock;

impl ClockFamily for ConstantClock {
    fn output(&self, _n: u32) -> Result<RenewalSpec> {
        RenewalSpec::explicit(vec![1.0], 1.0)
    }
    fn input(&self, _n: u32) -> Result<RenewalSpec> {
        RenewalSpec::exponential(0.0, 1.0)
    }
    fn bin_width(&self, _n: u32) -> f64 {
        1.0
    }
}

/// Interval concentrated at `θ τ`; the occupied bin jumps as `n` grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    pub tau: f64,
    pub theta: f64,
    pub reset_rate: f64,
}

impl PointMass {
    fn dt(&self, n: u32) -> f64 {
        self.tau / libm::ldexp(1.0, n as i32)
    }
}

impl ClockFamily for PointMass {
    fn output(&self, n: u32) -> Result<RenewalSpec> {
        let bin = libm::floor(self.theta * libm::ldexp(1.0, n as i32)) as usize;
        let mut pmf = vec![0.0; bin + 1];
        pmf[bin] = 1.0;
        RenewalSpec::explicit_trimmed(pmf, self.dt(n))
    }
    fn input(&self, n: u32) -> Result<RenewalSpec> {
        RenewalSpec::exponential(self.reset_rate, self.dt(n))
    }
    fn bin_width(&self, n: u32) -> f64 {
        self.dt(n)
    }
}

/// Memory costs and convergence increments at one precision.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: u32,
    pub dt: f64,
    pub num_states: usize,
    pub c_mu: f64,
    pub c_q1: f64,
    pub c_qinf: f64,
    /// `max |c^(n) − c^(n−1)|` over fine state pairs, coarse arguments
    /// mapped down one level. `None` at `n = 0`.
    pub delta_c: Option<f64>,
    /// `max |P^(n)/w^(n) − P^(n−1)/w^(n−1)|`.
    pub delta_p: Option<f64>,
    /// `max |G^(n) − ½ G^(n−1)|` for the weighted Gram matrices.
    pub delta_g: Option<f64>,
}

/// Level data reused when comparing precisions.
struct Level {
    p: Vec<f64>,
    c: Matrix,
    width: f64,
}

fn level(family: &dyn ClockFamily, n: u32) -> Result<Level> {
    let out = family.output(n)?;
    let p = clock_stationary_distribution(&family.input(n)?, &out)?;
    let c = clock_overlap_matrix(&out, Variant::QInf);
    Ok(Level { p, c, width: family.bin_width(n) })
}

/// One row of a precision sweep.
pub fn sweep_row(family: &dyn ClockFamily, n: u32) -> Result<SweepRow> {
    let out = family.output(n)?;
    let input = family.input(n)?;
    let p = clock_stationary_distribution(&input, &out)?;
    let c_mu = shannon_bits(&p);
    let cur = Level { p, c: clock_overlap_matrix(&out, Variant::QInf), width: family.bin_width(n) };
    let (delta_c, delta_p, delta_g) = if n == 0 {
        (None, None, None)
    } else {
        let prev = level(family, n - 1)?;
        let (dc, dp, dg) = increments(family, &cur, &prev);
        (Some(dc), Some(dp), Some(dg))
    };
    let Level { p, c, .. } = cur;
    let c_qinf = weighted_gram_entropy_bits(c, &p)?;
    let c_q1 = weighted_gram_entropy_bits(clock_overlap_matrix(&out, Variant::Q1), &p)?;
    Ok(SweepRow { n, dt: out.dt, num_states: out.len(), c_mu, c_q1, c_qinf, delta_c, delta_p, delta_g })
}

fn increments(family: &dyn ClockFamily, cur: &Level, prev: &Level) -> (f64, f64, f64) {
    let n = cur.p.len();
    let m = prev.p.len();
    let map: Vec<usize> = (0..n).map(|k| family.coarse_index(k).min(m - 1)).collect();
    let sp: Vec<f64> = cur.p.iter().map(|v| libm::sqrt(*v)).collect();
    let sq: Vec<f64> = prev.p.iter().map(|v| libm::sqrt(*v)).collect();
    let (mut dc, mut dg): (f64, f64) = (0.0, 0.0);
    for a in 0..n {
        let ra = cur.c.row(a);
        let rb = prev.c.row(map[a]);
        for b in 0..n {
            let fine = ra[b];
            let coarse = rb[map[b]];
            dc = dc.max(libm::fabs(fine - coarse));
            let g_fine = sp[a] * sp[b] * fine;
            let g_coarse = 0.5 * sq[map[a]] * sq[map[b]] * coarse;
            dg = dg.max(libm::fabs(g_fine - g_coarse));
        }
    }
    let dp = (0..n)
        .map(|k| libm::fabs(cur.p[k] / cur.width - prev.p[map[k]] / prev.width))
        .fold(0.0, f64::max);
    (dc, dp, dg)
}

/// Sequential sweep over `n_min..=n_max`.
pub fn precision_sweep(family: &dyn ClockFamily, n_min: u32, n_max: u32) -> Result<Vec<SweepRow>> {
    if n_min > n_max {
        return Err(Error::InvalidArgument { reason: "empty precision range".into() });
    }
    if n_max > 14 {
        return Err(Error::InvalidArgument { reason: "precision above 14 bits is out of range".into() });
    }
    (n_min..=n_max).map(|n| sweep_row(family, n)).collect()
}

/// Fitted convergence constants over a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `(n, Δc/δt)` for rows with an increment.
    pub ratios_c: Vec<(u32, f64)>,
    pub ratios_p: Vec<(u32, f64)>,
    /// `(n, ΔG/δt²)`; a Gram-level view of the same smoothness.
    pub ratios_g: Vec<(u32, f64)>,
    pub k_c: f64,
    pub k_p: f64,
    pub k_g: f64,
    pub bounded_c: bool,
    pub bounded_p: bool,
    pub bounded_g: bool,
}

impl ConvergenceReport {
    /// Both hypotheses of the bounded-cost criterion hold.
    pub fn bounded(&self) -> bool {
        self.bounded_c && self.bounded_p
    }
}

/// Largest allowed growth between successive ratios in the tail.
pub const BOUNDED_GROWTH: f64 = 1.05;

/// A ratio sequence counts as bounded when, over its last half (at least
/// two steps), no ratio exceeds its predecessor by more than
/// [`BOUNDED_GROWTH`].
pub fn is_bounded(ratios: &[f64]) -> bool {
    if ratios.len() < 2 {
        return true;
    }
    let tail = (ratios.len() / 2).max(2).min(ratios.len());
    let tail = &ratios[ratios.len() - tail..];
    tail.windows(2).all(|w| w[1] <= BOUNDED_GROWTH * w[0] || w[1] == 0.0)
}

pub fn convergence_diagnostics(rows: &[SweepRow]) -> Result<ConvergenceReport> {
    if rows.len() < 3 {
        return Err(Error::InsufficientRows { needed: 3, got: rows.len() });
    }
    let mut ratios_c = Vec::new();
    let mut ratios_p = Vec::new();
    let mut ratios_g = Vec::new();
    for r in rows {
        if let (Some(dc), Some(dp), Some(dg)) = (r.delta_c, r.delta_p, r.delta_g) {
            ratios_c.push((r.n, dc / r.dt));
            ratios_p.push((r.n, dp / r.dt));
            ratios_g.push((r.n, dg / (r.dt * r.dt)));
        }
    }
    let values = |v: &[(u32, f64)]| -> Vec<f64> { v.iter().map(|x| x.1).collect() };
    let max = |v: &[(u32, f64)]| v.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(ConvergenceReport {
        k_c: max(&ratios_c),
        k_p: max(&ratios_p),
        k_g: max(&ratios_g),
        bounded_c: is_bounded(&values(&ratios_c)),
        bounded_p: is_bounded(&values(&ratios_p)),
        bounded_g: is_bounded(&values(&ratios_g)),
        ratios_c,
        ratios_p,
        ratios_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_clock_hazards() {
        let spec = RenewalSpec::uniform(1.0, 0.25).unwrap();
        let s = build_clock_strategy(&spec).unwrap();
        for n in 0..4 {
            assert!((s.prob(n, 0, 1) - 1.0 / (4 - n) as f64).abs() < 1e-15);
            assert_eq!(s.prob(n, 1, 0), 1.0);
            assert_eq!(s.next(n, 1, 0), Some(0));
        }
        assert_eq!(s.minimize().strategy.num_states(), 4);
    }

    #[test]
    fn single_state_clock() {
        let spec = RenewalSpec::uniform(1.0, 1.0).unwrap();
        let s = build_clock_strategy(&spec).unwrap();
        assert_eq!(s.num_states(), 1);
        assert_eq!(s.prob(0, 0, 1), 1.0);
    }

    #[test]
    fn degenerate_survival() {
        assert!(matches!(
            RenewalSpec::explicit(vec![1.0, 0.0], 1.0),
            Err(Error::DegenerateSurvival { index: 1 })
        ));
        assert_eq!(RenewalSpec::explicit_trimmed(vec![1.0, 0.0], 1.0).unwrap().len(), 1);
    }

    #[test]
    fn stationary_without_resets() {
        let out = RenewalSpec::uniform(1.0, 0.25).unwrap();
        let none = RenewalSpec::exponential(0.0, 0.25).unwrap();
        let p = clock_stationary_distribution(&none, &out).unwrap();
        for (a, b) in p.iter().zip([0.4, 0.3, 0.2, 0.1]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_overlap_examples() {
        let spec = RenewalSpec::uniform(1.0, 0.25).unwrap();
        let c = clock_overlap_matrix(&spec, Variant::QInf);
        assert!((c[(0, 1)] - libm::sqrt(0.75)).abs() < 1e-15);
        let q = clock_overlap_matrix(&spec, Variant::Q1);
        assert!((q[(0, 1)] - 1.0 / libm::sqrt(12.0)).abs() < 1e-15);
        assert_eq!(q[(2, 2)], 1.0);
    }

    #[test]
    fn memoryless_clock_is_one_state() {
        let spec = RenewalSpec::exponential(2.0, 0.1).unwrap();
        let s = build_clock_strategy(&spec).unwrap();
        assert_eq!(s.num_states(), 1);
        assert!((s.prob(0, 0, 1) - (1.0 - libm::exp(-0.2))).abs() < 1e-15);
    }

    #[test]
    fn constant_family_has_no_increments() {
        let rows = precision_sweep(&ConstantClock, 0, 4).unwrap();
        for r in &rows[1..] {
            assert_eq!(r.delta_c, Some(0.0));
            assert_eq!(r.delta_p, Some(0.0));
            assert_eq!(r.c_mu, 0.0);
        }
        let d = convergence_diagnostics(&rows).unwrap();
        assert!(d.bounded());
        assert!(matches!(convergence_diagnostics(&rows[..2]), Err(Error::InsufficientRows { .. })));
    }

    #[test]
    fn bounded_rule() {
        assert!(is_bounded(&[5.0, 3.0, 2.9, 2.95]));
        assert!(!is_bounded(&[1.0, 2.0, 4.0, 8.0]));
        assert!(is_bounded(&[0.0, 0.0, 0.0]));
        assert!(!is_bounded(&[0.0, 0.0, 1.0]));
    }

    #[test]
    fn zero_precision_costs_nothing() {
        let row = sweep_row(&UniformReset { tau: 1.0, reset_rate: 0.5 }, 0).unwrap();
        assert_eq!(row.num_states, 1);
        assert_eq!((row.c_mu, row.c_q1, row.c_qinf), (0.0, 0.0, 0.0));
    }
}
