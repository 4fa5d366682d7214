//! Exact path-sum evaluation of small mixed moments.
//!
//! Paths are vertex lists `u_0, ..., u_m` with `u_m = u_0`, vertices 1-based.
//! A moment is a sum over tuples of paths of `E prod_p prod_i H(u_i, u_{i+1})`;
//! tuples are grouped by the traversal counts of each edge so that the
//! expectation is evaluated once per distinct pattern.

use std::collections::HashMap;

use serde::Serialize;

use crate::chebyshev::{MomentKind, MomentSpec};
use crate::entries::{EntryKind, EntryProcessSpec, SymmetryClass, RESAMPLE_INTENSITY};
use crate::error::{invalid, Error, Result};

/// Maximum number of candidate paths a single enumeration may visit.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// How the non-backtracking condition treats the closing step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// `u_i != u_{i+2}` for `0 <= i <= n-2` only. This is the convention for
    /// which `tr P_n^{(N)}(H)` equals the path sum.
    Open,
    /// Additionally `u_{n-1} != u_1`.
    Cyclic,
}

#[derive(Clone, Copy, Debug)]
enum Constraint {
    Free,
    NonBacktracking(Closure),
}

/// Odometer enumeration of closed paths in lexicographic order.
#[derive(Clone, Debug)]
pub struct PathIter {
    nv: usize,
    u: Vec<usize>,
    pos: usize,
    constraint: Constraint,
    done: bool,
}

impl PathIter {
    fn new(nv: usize, len: usize, constraint: Constraint) -> Self {
        Self {
            nv,
            u: vec![0; len.max(1)],
            pos: 0,
            constraint,
            done: nv == 0,
        }
    }

    fn valid_at(&self, i: usize) -> bool {
        match self.constraint {
            Constraint::Free => true,
            Constraint::NonBacktracking(_) => {
                (i < 1 || self.u[i] != self.u[i - 1]) && (i < 2 || self.u[i] != self.u[i - 2])
            }
        }
    }

    fn closure_ok(&self) -> bool {
        let n = self.u.len();
        match self.constraint {
            Constraint::Free => true,
            Constraint::NonBacktracking(c) => {
                let u = &self.u;
                if u[n - 1] == u[0] || (n >= 2 && u[n - 2] == u[0]) {
                    return false;
                }
                !(c == Closure::Cyclic && n >= 2 && u[n - 1] == u[1])
            }
        }
    }
}

impl Iterator for PathIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        loop {
            if self.done {
                return None;
            }
            let i = self.pos;
            self.u[i] += 1;
            if self.u[i] > self.nv {
                self.u[i] = 0;
                if i == 0 {
                    self.done = true;
                    return None;
                }
                self.pos -= 1;
                continue;
            }
            if !self.valid_at(i) {
                continue;
            }
            if i + 1 < self.u.len() {
                self.pos += 1;
                continue;
            }
            if self.closure_ok() {
                let mut p = self.u.clone();
                p.push(self.u[0]);
                return Some(p);
            }
        }
    }
}

fn guard(count: f64) -> Result<()> {
    if count > ENUMERATION_LIMIT {
        Err(Error::GuardExceeded {
            count,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// All `N^m` closed paths of length `m >= 1` on the complete graph with loops.
pub fn enumerate_closed_paths(size: usize, m: usize) -> Result<PathIter> {
    if size == 0 || m == 0 {
        return invalid("closed paths need N >= 1 and m >= 1");
    }
    guard((size as f64).powi(m as i32))?;
    Ok(PathIter::new(size, m, Constraint::Free))
}

/// Closed loopless non-backtracking paths of length `n`.
pub fn enumerate_nb_loopless(size: usize, n: usize, closure: Closure) -> Result<PathIter> {
    if size == 0 {
        return invalid("paths need N >= 1");
    }
    guard(((size - 1) as f64).powi(n as i32))?;
    if n == 0 {
        return Ok(PathIter::new(size, 1, Constraint::Free));
    }
    Ok(PathIter::new(size, n, Constraint::NonBacktracking(closure)))
}

/// Calls `f` on every closed loopless non-backtracking path (with closure
/// vertex). For `n = 0` the paths are the single vertices.
pub fn visit_nb_loopless(
    size: usize,
    n: usize,
    closure: Closure,
    mut f: impl FnMut(&[usize]),
) -> Result<()> {
    if n == 0 {
        guard(size as f64)?;
        for v in 1..=size {
            f(&[v]);
        }
        return Ok(());
    }
    for p in enumerate_nb_loopless(size, n, closure)? {
        f(&p);
    }
    Ok(())
}

/// A `k`-tuple of closed paths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathTuple {
    paths: Vec<Vec<usize>>,
}

impl PathTuple {
    /// Each path must be closed and use vertices in `1..=sizes[p]`.
    pub fn new(paths: Vec<Vec<usize>>, sizes: &[usize]) -> Result<Self> {
        if paths.len() != sizes.len() {
            return Err(Error::SizeMismatch("one size per path is required".into()));
        }
        for (p, (path, &n)) in paths.iter().zip(sizes).enumerate() {
            if path.len() < 2 || path.first() != path.last() {
                return invalid(format!("path {p} is not closed"));
            }
            if path.iter().any(|&v| v == 0 || v > n) {
                return invalid(format!("path {p} leaves the vertex range 1..={n}"));
            }
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }
}

/// Traversal counts per unordered and per oriented edge.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeMultiplicity {
    pub unordered: HashMap<(usize, usize), usize>,
    pub oriented: HashMap<(usize, usize), usize>,
}

impl EdgeMultiplicity {
    pub fn of_tuple(t: &PathTuple) -> Self {
        let mut m = Self::default();
        for path in &t.paths {
            for w in path.windows(2) {
                let key = (w[0].min(w[1]), w[0].max(w[1]));
                *m.unordered.entry(key).or_default() += 1;
                *m.oriented.entry((w[0], w[1])).or_default() += 1;
            }
        }
        m
    }
}

/// Every unordered edge traversed an even number of times.
pub fn is_even_tuple(t: &PathTuple) -> bool {
    EdgeMultiplicity::of_tuple(t)
        .unordered
        .values()
        .all(|c| c % 2 == 0)
}

/// Per-edge traversal pattern of one path: `(a, b, count a->b, count b->a)`
/// with `a <= b`, sorted. Loops carry their count in the first slot.
type Signature = Vec<(u32, u32, u16, u16)>;

fn signature(path: &[usize]) -> Signature {
    let mut map: HashMap<(u32, u32), (u16, u16)> = HashMap::new();
    for w in path.windows(2) {
        let (a, b) = (w[0] as u32, w[1] as u32);
        if a <= b {
            map.entry((a, b)).or_default().0 += 1;
        } else {
            map.entry((b, a)).or_default().1 += 1;
        }
    }
    let mut v: Signature = map.into_iter().map(|((a, b), (f, r))| (a, b, f, r)).collect();
    v.sort_unstable();
    v
}

fn grouped_paths(kind: MomentKind, size: usize, len: usize) -> Result<Vec<(Signature, u64)>> {
    let mut groups: HashMap<Signature, u64> = HashMap::new();
    match kind {
        MomentKind::Plain => {
            for p in enumerate_closed_paths(size, len)? {
                *groups.entry(signature(&p)).or_default() += 1;
            }
        }
        MomentKind::Modified => {
            visit_nb_loopless(size, len, Closure::Open, |p| {
                *groups.entry(signature(p)).or_default() += 1;
            })?;
        }
    }
    let mut v: Vec<_> = groups.into_iter().collect();
    v.sort_unstable();
    Ok(v)
}

/// Options for the exact evaluator.
#[derive(Clone, Copy, Debug)]
pub struct ExactOptions {
    /// Skip tuples in which some edge is traversed an odd number of times.
    pub skip_odd: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { skip_odd: true }
    }
}

/// `sum over tuples of prod_p w_p * E[prod H]` with `w_p = (2 sqrt(N_p))^{-m_p}`
/// for plain moments and `(N_p - 2)^{-n_p/2}` for modified ones.
///
/// Each edge may be visited at no more than two distinct times; otherwise the
/// result is [`Error::OracleOutOfScope`].
pub fn exact_mixed_moment(spec: &MomentSpec, model: &EntryProcessSpec) -> Result<f64> {
    exact_mixed_moment_with(spec, model, ExactOptions::default())
}

/// [`exact_mixed_moment`] for a modified-moment spec.
pub fn exact_modified_moment(spec: &MomentSpec, model: &EntryProcessSpec) -> Result<f64> {
    if spec.kind != MomentKind::Modified {
        return invalid("exact_modified_moment needs a modified-moment spec");
    }
    exact_mixed_moment(spec, model)
}

pub fn exact_mixed_moment_with(
    spec: &MomentSpec,
    model: &EntryProcessSpec,
    opts: ExactOptions,
) -> Result<f64> {
    spec.validate()?;
    if spec.kind == MomentKind::Modified && model.kind() != EntryKind::ResampledUnimodular {
        // The non-backtracking path expansion of tr P_n needs |h_ij| = 1 and h_ii = 0.
        return Err(Error::NotUnimodular(format!(
            "modified moments have a path expansion only for unimodular entries, not {}",
            model.label()
        )));
    }
    let k = spec.k();
    let mut groups = Vec::with_capacity(k);
    let mut weight = 1.0;
    for p in 0..k {
        let (n, m) = (spec.sizes[p], spec.exponents[p]);
        groups.push(grouped_paths(spec.kind, n, m)?);
        weight *= match spec.kind {
            MomentKind::Plain => (2.0 * (n as f64).sqrt()).powi(-(m as i32)),
            MomentKind::Modified => ((n - 2) as f64).powf(-(m as f64) / 2.0),
        };
    }
    let mut ctx = Ctx {
        spec,
        model,
        opts,
        groups: &groups,
        acc: Neumaier::default(),
    };
    let mut slots: Vec<Slot> = Vec::new();
    ctx.recurse(0, 1, &mut slots)?;
    Ok(weight * ctx.acc.total())
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    a: u32,
    b: u32,
    tau: f64,
    fwd: u32,
    bwd: u32,
}

struct Ctx<'a> {
    spec: &'a MomentSpec,
    model: &'a EntryProcessSpec,
    opts: ExactOptions,
    groups: &'a [Vec<(Signature, u64)>],
    acc: Neumaier,
}

impl Ctx<'_> {
    fn recurse(&mut self, p: usize, count: u64, slots: &mut Vec<Slot>) -> Result<()> {
        if p == self.groups.len() {
            let e = self.expectation(slots)?;
            if e != 0.0 {
                self.acc.add(count as f64 * e);
            }
            return Ok(());
        }
        let tau = self.spec.times[p];
        let groups = self.groups;
        for (sig, c) in &groups[p] {
            let mark = slots.len();
            for &(a, b, f, r) in sig {
                slots.push(Slot {
                    a,
                    b,
                    tau,
                    fwd: f as u32,
                    bwd: r as u32,
                });
            }
            self.recurse(p + 1, count * c, slots)?;
            slots.truncate(mark);
        }
        Ok(())
    }

    fn expectation(&self, slots: &[Slot]) -> Result<f64> {
        let mut per_edge: Vec<Slot> = slots.to_vec();
        per_edge.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)).then(x.tau.total_cmp(&y.tau)));
        if self.opts.skip_odd {
            let mut i = 0;
            while i < per_edge.len() {
                let mut j = i;
                let mut tot = 0;
                while j < per_edge.len() && (per_edge[j].a, per_edge[j].b) == (per_edge[i].a, per_edge[i].b) {
                    tot += per_edge[j].fwd + per_edge[j].bwd;
                    j += 1;
                }
                if tot % 2 == 1 {
                    return Ok(0.0);
                }
                i = j;
            }
        }
        let mut prod = 1.0;
        let mut i = 0;
        while i < per_edge.len() {
            let key = (per_edge[i].a, per_edge[i].b);
            let mut times: Vec<(f64, u32, u32)> = Vec::new();
            while i < per_edge.len() && (per_edge[i].a, per_edge[i].b) == key {
                let s = per_edge[i];
                match times.last_mut() {
                    Some(last) if last.0 == s.tau => {
                        last.1 += s.fwd;
                        last.2 += s.bwd;
                    }
                    _ => times.push((s.tau, s.fwd, s.bwd)),
                }
                i += 1;
            }
            let e = entry_moment(self.model, key.0 == key.1, &times)?;
            if e == 0.0 {
                return Ok(0.0);
            }
            prod *= e;
        }
        Ok(prod)
    }
}

/// `E prod_t h(t)^{a_t} conj(h(t))^{b_t}` for one matrix entry.
/// `times` holds `(tau, a, b)` with distinct `tau` in ascending order.
pub fn entry_moment(model: &EntryProcessSpec, diagonal: bool, times: &[(f64, u32, u32)]) -> Result<f64> {
    if times.is_empty() {
        return Ok(1.0);
    }
    if times.len() > 2 {
        return Err(Error::OracleOutOfScope(format!(
            "an entry is visited at {} distinct times; at most two are supported",
            times.len()
        )));
    }
    let rho = if times.len() == 2 {
        let dt = (times[1].0 - times[0].0).abs();
        match model.kind() {
            EntryKind::GaussianOu => (-dt).exp(),
            _ => (-RESAMPLE_INTENSITY * dt).exp(),
        }
    } else {
        1.0
    };
    let tot = |t: &(f64, u32, u32)| t.1 + t.2;
    if diagonal {
        if model.zero_diagonal() {
            return Ok(0.0);
        }
        let v = model.diagonal_variance();
        let scale = |p: u32| v.powf(p as f64 / 2.0);
        return Ok(match (model.kind(), times) {
            (_, [t]) => scale(tot(t)) * gauss_moment(tot(t)),
            (EntryKind::GaussianOu, [t1, t2]) => {
                scale(tot(t1) + tot(t2)) * isserlis(tot(t1), tot(t2), rho)
            }
            (_, [t1, t2]) => {
                let (p1, p2) = (tot(t1), tot(t2));
                scale(p1 + p2)
                    * (rho * gauss_moment(p1 + p2)
                        + (1.0 - rho) * gauss_moment(p1) * gauss_moment(p2))
            }
            _ => unreachable!(),
        });
    }
    Ok(match (model.kind(), model.beta()) {
        (EntryKind::ResampledUnimodular, SymmetryClass::Real) => {
            let even = |p: u32| if p % 2 == 0 { 1.0 } else { 0.0 };
            match times {
                [t] => even(tot(t)),
                [t1, t2] => {
                    rho * even(tot(t1) + tot(t2)) + (1.0 - rho) * even(tot(t1)) * even(tot(t2))
                }
                _ => unreachable!(),
            }
        }
        (EntryKind::ResampledUnimodular, SymmetryClass::Complex) => {
            let bal = |d: i64| if d == 0 { 1.0 } else { 0.0 };
            let d = |t: &(f64, u32, u32)| t.1 as i64 - t.2 as i64;
            match times {
                [t] => bal(d(t)),
                [t1, t2] => rho * bal(d(t1) + d(t2)) + (1.0 - rho) * bal(d(t1)) * bal(d(t2)),
                _ => unreachable!(),
            }
        }
        (EntryKind::ResampledGaussian, SymmetryClass::Real) => match times {
            [t] => gauss_moment(tot(t)),
            [t1, t2] => {
                rho * gauss_moment(tot(t1) + tot(t2))
                    + (1.0 - rho) * gauss_moment(tot(t1)) * gauss_moment(tot(t2))
            }
            _ => unreachable!(),
        },
        (EntryKind::ResampledGaussian, SymmetryClass::Complex) => match times {
            [t] => complex_gauss_moment(t.1, t.2),
            [t1, t2] => {
                rho * complex_gauss_moment(t1.1 + t2.1, t1.2 + t2.2)
                    + (1.0 - rho) * complex_gauss_moment(t1.1, t1.2) * complex_gauss_moment(t2.1, t2.2)
            }
            _ => unreachable!(),
        },
        (EntryKind::GaussianOu, SymmetryClass::Real) => match times {
            [t] => gauss_moment(tot(t)),
            [t1, t2] => isserlis(tot(t1), tot(t2), rho),
            _ => unreachable!(),
        },
        (EntryKind::GaussianOu, SymmetryClass::Complex) => match times {
            [t] => complex_gauss_moment(t.1, t.2),
            [t1, t2] => complex_wick(t1.1, t1.2, t2.1, t2.2, rho),
            _ => unreachable!(),
        },
    })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn double_factorial_odd(p: i64) -> f64 {
    // (p)!! for odd p >= -1
    let mut acc = 1.0;
    let mut q = p;
    while q > 1 {
        acc *= q as f64;
        q -= 2;
    }
    acc
}

fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `E X^p` for a standard real Gaussian.
fn gauss_moment(p: u32) -> f64 {
    if p % 2 == 1 {
        0.0
    } else {
        double_factorial_odd(p as i64 - 1)
    }
}

/// `E h^a conj(h)^b` for a standard complex Gaussian (`E |h|^2 = 1`).
fn complex_gauss_moment(a: u32, b: u32) -> f64 {
    if a == b {
        factorial(a)
    } else {
        0.0
    }
}

/// `E X^p Y^q` for unit Gaussians with correlation `rho`.
fn isserlis(p: u32, q: u32, rho: f64) -> f64 {
    if (p + q) % 2 == 1 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut j = p % 2;
    while j <= p.min(q) {
        acc += binom(p, j)
            * binom(q, j)
            * factorial(j)
            * rho.powi(j as i32)
            * double_factorial_odd(p as i64 - j as i64 - 1)
            * double_factorial_odd(q as i64 - j as i64 - 1);
        j += 2;
    }
    acc
}

/// `E h1^{a1} conj(h1)^{b1} h2^{a2} conj(h2)^{b2}` for unit complex Gaussians
/// with `E h1 conj(h2) = rho` and `E h1 h2 = 0`.
fn complex_wick(a1: u32, b1: u32, a2: u32, b2: u32, rho: f64) -> f64 {
    if a1 + a2 != b1 + b2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for x in 0..=a1.min(b1) {
        let y = a1 - x;
        let z = b1 - x;
        if z > a2 || y > b2 {
            continue;
        }
        let w = a2 - z;
        debug_assert_eq!(b2, y + w);
        acc += binom(a1, x)
            * binom(b1, x)
            * factorial(x)
            * binom(b2, y)
            * factorial(y)
            * binom(a2, z)
            * factorial(z)
            * factorial(w)
            * rho.powi((y + z) as i32);
    }
    acc
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::trace_p_spectral;
    use crate::linalg::HermitianMatrix;
    use crate::spectra::SpectrumFrame;

    #[test]
    fn closed_path_counts() {
        assert_eq!(enumerate_closed_paths(2, 2).unwrap().count(), 4);
        assert_eq!(enumerate_closed_paths(3, 1).unwrap().count(), 3);
        assert_eq!(enumerate_closed_paths(2, 3).unwrap().count(), 8);
        let all: Vec<_> = enumerate_closed_paths(2, 2).unwrap().collect();
        assert_eq!(all[0], vec![1, 1, 1]);
        assert_eq!(all[3], vec![2, 2, 2]);
        assert!(matches!(enumerate_closed_paths(10, 8), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn nb_counts() {
        assert_eq!(enumerate_nb_loopless(3, 3, Closure::Open).unwrap().count(), 6);
        assert_eq!(enumerate_nb_loopless(3, 2, Closure::Open).unwrap().count(), 0);
        assert_eq!(enumerate_nb_loopless(4, 3, Closure::Open).unwrap().count(), 24);
        assert_eq!(enumerate_nb_loopless(4, 1, Closure::Open).unwrap().count(), 0);
        for p in enumerate_nb_loopless(5, 6, Closure::Open).unwrap() {
            assert_eq!(p.len(), 7);
            assert_eq!(p[0], p[6]);
            for i in 0..6 {
                assert_ne!(p[i], p[i + 1]);
            }
            for i in 0..5 {
                assert_ne!(p[i], p[i + 2]);
            }
        }
    }

    #[test]
    fn nb_against_filtered_brute_force() {
        for (n_vert, len) in [(4usize, 4usize), (4, 5), (5, 4)] {
            for closure in [Closure::Open, Closure::Cyclic] {
                let fast = enumerate_nb_loopless(n_vert, len, closure).unwrap().count();
                let slow = enumerate_closed_paths(n_vert, len)
                    .unwrap()
                    .filter(|p| {
                        let ok_step = (0..len).all(|i| p[i] != p[i + 1]);
                        let ok_back = (0..len - 1).all(|i| p[i] != p[i + 2]);
                        let ok_cyc = closure == Closure::Open || p[len - 1] != p[1];
                        ok_step && ok_back && ok_cyc
                    })
                    .count();
                assert_eq!(fast, slow);
            }
        }
    }

    fn random_unimodular(n: usize, seed: u64) -> HermitianMatrix {
        use rand::Rng;
        let mut r = crate::rng::stream(seed);
        HermitianMatrix::from_lower_complex(n, |i, j| {
            if i == j {
                num_complex::Complex64::new(0.0, 0.0)
            } else {
                num_complex::Complex64::from_polar(1.0, r.random::<f64>() * 6.283185307179586)
            }
        })
    }

    fn path_trace(h: &HermitianMatrix, n: usize, closure: Closure) -> f64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        visit_nb_loopless(h.dim(), n, closure, |p| {
            let mut prod = num_complex::Complex64::new(1.0, 0.0);
            for w in p.windows(2) {
                prod *= h.get(w[0] - 1, w[1] - 1);
            }
            acc += prod;
        })
        .unwrap();
        acc.re / ((h.dim() - 2) as f64).powf(n as f64 / 2.0)
    }

    #[test]
    fn open_closure_is_the_trace_convention() {
        let h = random_unimodular(5, 17);
        let f = SpectrumFrame::of_matrix(0.0, &h).unwrap();
        let spectral = trace_p_spectral(&f, 5).unwrap();
        assert!((path_trace(&h, 5, Closure::Open) - spectral).abs() < 1e-9);
        assert!((path_trace(&h, 5, Closure::Cyclic) - spectral).abs() > 1e-3);
    }

    #[test]
    fn even_tuples() {
        let t = PathTuple::new(vec![vec![1, 2, 1]], &[2]).unwrap();
        assert!(is_even_tuple(&t));
        let t = PathTuple::new(vec![vec![1, 2, 3, 1]], &[3]).unwrap();
        assert!(!is_even_tuple(&t));
        let t = PathTuple::new(vec![vec![1, 2, 1], vec![1, 2, 1]], &[2, 2]).unwrap();
        assert!(is_even_tuple(&t));
        let m = EdgeMultiplicity::of_tuple(&t);
        assert_eq!(m.unordered[&(1, 2)], 4);
        assert_eq!(m.oriented[&(1, 2)] + m.oriented[&(2, 1)], 4);
        assert!(PathTuple::new(vec![vec![1, 2]], &[2]).is_err());
        assert!(PathTuple::new(vec![vec![1, 3, 1]], &[2]).is_err());
    }

    fn unimodular(beta: SymmetryClass) -> EntryProcessSpec {
        EntryProcessSpec::unimodular(beta)
    }

    #[test]
    fn small_exact_values() {
        let plain = |m, n| MomentSpec::single(MomentKind::Plain, m, 0.0, n).unwrap();
        let u1 = unimodular(SymmetryClass::Real);
        let g1 = EntryProcessSpec::gaussian_ou(SymmetryClass::Real);
        assert!((exact_mixed_moment(&plain(2, 3), &u1).unwrap() - 0.5).abs() < 1e-15);
        assert!((exact_mixed_moment(&plain(2, 4), &g1).unwrap() - 1.25).abs() < 1e-15);
        assert!((exact_mixed_moment(&plain(2, 4), &u1).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(exact_mixed_moment(&plain(3, 4), &g1).unwrap(), 0.0);
        let modi = |n, size| MomentSpec::single(MomentKind::Modified, n, 0.0, size).unwrap();
        assert_eq!(exact_modified_moment(&modi(3, 3), &u1).unwrap(), 0.0);
        assert_eq!(exact_modified_moment(&modi(2, 3), &u1).unwrap(), 0.0);
        let pair = MomentSpec::new(MomentKind::Modified, vec![3, 3], vec![0.0, 0.0], vec![3, 3]).unwrap();
        // Two triangles on three vertices: every one of the 6 x 6 pairs is even.
        assert!((exact_modified_moment(&pair, &u1).unwrap() - 36.0).abs() < 1e-12);
        assert!(matches!(exact_modified_moment(&modi(3, 3), &g1), Err(Error::NotUnimodular(_))));
        assert!(exact_modified_moment(&plain(2, 3), &u1).is_err());
    }

    /// Average over every sign pattern of a real unimodular matrix.
    fn exhaustive_sign_average(n: usize, f: impl Fn(&HermitianMatrix) -> f64) -> f64 {
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
        let total = 1u64 << edges.len();
        let mut acc = 0.0;
        for mask in 0..total {
            let mut data = vec![0.0; n * n];
            for (k, &(i, j)) in edges.iter().enumerate() {
                let v = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
            acc += f(&HermitianMatrix::from_real(n, data).unwrap());
        }
        acc / total as f64
    }

    #[test]
    fn oracle_matches_exhaustive_sign_average() {
        let u1 = unimodular(SymmetryClass::Real);
        for n in [3usize, 4] {
            for m in 1..=6 {
                let spec = MomentSpec::single(MomentKind::Plain, m, 0.1, n).unwrap();
                let c = 1.0 / (2.0 * (n as f64).sqrt());
                let brute = exhaustive_sign_average(n, |h| {
                    h.eigenvalues().iter().map(|x| (x * c).powi(m as i32)).sum()
                });
                let exact = exact_mixed_moment(&spec, &u1).unwrap();
                assert!((brute - exact).abs() < 1e-12, "N={n} m={m}: {brute} vs {exact}");
            }
            for len in 1..=5 {
                let spec = MomentSpec::single(MomentKind::Modified, len, 0.0, n).unwrap();
                let brute = exhaustive_sign_average(n, |h| {
                    trace_p_spectral(&SpectrumFrame::of_matrix(0.0, h).unwrap(), len).unwrap()
                });
                let exact = exact_modified_moment(&spec, &u1).unwrap();
                assert!((brute - exact).abs() < 1e-10, "N={n} n={len}: {brute} vs {exact}");
            }
        }
        let spec = MomentSpec::new(MomentKind::Plain, vec![2, 4], vec![0.0, 0.0], vec![3, 3]).unwrap();
        let c = 1.0 / 12.0f64.sqrt();
        let brute = exhaustive_sign_average(3, |h| {
            let ev = h.eigenvalues();
            let t2: f64 = ev.iter().map(|x| (x * c).powi(2)).sum();
            let t4: f64 = ev.iter().map(|x| (x * c).powi(4)).sum();
            t2 * t4
        });
        assert!((brute - exact_mixed_moment(&spec, &u1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn two_time_oracle_matches_exhaustive_law() {
        // Resampled signs: each edge keeps its value with probability rho,
        // otherwise both values are independent and uniform.
        let (t1, t2) = (-0.2, 0.3);
        let rho = (-(t2 - t1) as f64).exp();
        let n = 3usize;
        let edges = [(1usize, 0usize), (2, 0), (2, 1)];
        let states = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
        let p_same = 0.5 * (rho + 0.5 * (1.0 - rho));
        let p_diff = 0.5 * 0.5 * (1.0 - rho);
        let c = 1.0 / 12.0f64.sqrt();
        let mut brute = 0.0;
        for code in 0..64usize {
            let mut a = vec![0.0; 9];
            let mut b = vec![0.0; 9];
            let mut w = 1.0;
            for (k, &(i, j)) in edges.iter().enumerate() {
                let (x, y) = states[(code >> (2 * k)) & 3];
                w *= if x == y { p_same } else { p_diff };
                a[i * n + j] = x;
                a[j * n + i] = x;
                b[i * n + j] = y;
                b[j * n + i] = y;
            }
            let ha = HermitianMatrix::from_real(n, a).unwrap();
            let hb = HermitianMatrix::from_real(n, b).unwrap();
            let tr = |h: &HermitianMatrix, m: i32| h.eigenvalues().iter().map(|x| (x * c).powi(m)).sum::<f64>();
            brute += w * tr(&ha, 2) * tr(&hb, 4);
        }
        let spec = MomentSpec::new(MomentKind::Plain, vec![2, 4], vec![t1, t2], vec![3, 3]).unwrap();
        let exact = exact_mixed_moment(&spec, &unimodular(SymmetryClass::Real)).unwrap();
        assert!((brute - exact).abs() < 1e-12, "{brute} vs {exact}");
    }

    #[test]
    fn skipping_odd_tuples_changes_nothing() {
        let models = [
            unimodular(SymmetryClass::Real),
            unimodular(SymmetryClass::Complex),
            EntryProcessSpec::gaussian_ou(SymmetryClass::Real),
            EntryProcessSpec::gaussian_ou(SymmetryClass::Complex),
            EntryProcessSpec::resampled_gaussian(SymmetryClass::Real),
            EntryProcessSpec::resampled_gaussian(SymmetryClass::Complex),
        ];
        let spec = MomentSpec::new(MomentKind::Plain, vec![3, 3], vec![0.0, 0.4], vec![3, 3]).unwrap();
        for m in models {
            let a = exact_mixed_moment_with(&spec, &m, ExactOptions { skip_odd: true }).unwrap();
            let b = exact_mixed_moment_with(&spec, &m, ExactOptions { skip_odd: false }).unwrap();
            assert!((a - b).abs() < 1e-13, "{m:?}");
        }
    }

    #[test]
    fn odd_total_parity_vanishes() {
        let spec = MomentSpec::new(MomentKind::Plain, vec![2, 3], vec![0.0, 0.5], vec![3, 3]).unwrap();
        for m in [unimodular(SymmetryClass::Real), EntryProcessSpec::gaussian_ou(SymmetryClass::Complex)] {
            assert_eq!(exact_mixed_moment(&spec, &m).unwrap(), 0.0);
        }
        let spec = MomentSpec::new(MomentKind::Modified, vec![3, 4], vec![0.0, 0.0], vec![4, 4]).unwrap();
        assert_eq!(exact_modified_moment(&spec, &unimodular(SymmetryClass::Real)).unwrap(), 0.0);
    }

    #[test]
    fn three_times_on_one_edge_is_out_of_scope() {
        let spec = MomentSpec::new(
            MomentKind::Plain,
            vec![2, 2, 2],
            vec![-0.5, 0.0, 0.5],
            vec![2, 2, 2],
        )
        .unwrap();
        let r = exact_mixed_moment(&spec, &unimodular(SymmetryClass::Real));
        assert!(matches!(r, Err(Error::OracleOutOfScope(_))));
    }

    #[test]
    fn wick_formulas() {
        // E X^2 Y^2 = 1 + 2 rho^2
        assert!((isserlis(2, 2, 0.3) - (1.0 + 2.0 * 0.09)).abs() < 1e-15);
        assert!((isserlis(1, 1, 0.3) - 0.3).abs() < 1e-15);
        assert!((isserlis(3, 1, 0.3) - 0.9).abs() < 1e-15);
        // E |h1|^2 |h2|^2 = 1 + rho^2
        assert!((complex_wick(1, 1, 1, 1, 0.3) - 1.09).abs() < 1e-15);
        assert!((complex_wick(1, 0, 0, 1, 0.3) - 0.3).abs() < 1e-15);
        assert!((complex_wick(2, 0, 0, 2, 0.3) - 2.0 * 0.09).abs() < 1e-15);
        assert_eq!(complex_wick(1, 0, 1, 0, 0.3), 0.0);
        assert_eq!(complex_gauss_moment(2, 2), 2.0);
    }
}
