//! Young towers built from first-return maps to a base interval.

use std::sync::Arc;

use crate::dynamics::orbit::log_derivative_along;
use crate::dynamics::{lyapunov_exponent, mean_log_derivative, Branch, Interval, PiecewiseMap};
use crate::error::{Error, Result};
use crate::regression::fit_line;
use crate::report::{fmt_real, Table};
use crate::scalar::Real;

/// Largest tail mass accepted by [`induce_first_return`].
pub const MAX_TAIL_MASS: f64 = 0.2;
/// Largest tail mass accepted by [`kac_and_lambda`].
pub const KAC_TAIL_MASS: f64 = 0.05;
/// Polynomial tails decaying slower than `n^{-1.05}` are treated as having an
/// infinite return-time sum.
pub const INFINITE_KAC_EXPONENT: f64 = -1.05;
/// Cap on the number of pending excursion intervals per step.
pub const MAX_FRONTIER: usize = 1 << 14;

/// `μ(I)` for the map's attached density, normalised Lebesgue otherwise.
pub(crate) fn reference_measure<S: Real>(map: &PiecewiseMap<S>, i: &Interval<S>) -> S {
    match map.density() {
        Some(d) => d.mass(i.lo, i.hi),
        None => i.width() / map.phase().width(),
    }
}

/// One return-time cell `Λⱼ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell<S> {
    pub interval: Interval<S>,
    pub return_time: usize,
    /// Branch labels of `y, Ty, …, T^{R-1}y` for `y ∈ Λⱼ`.
    pub word: Vec<usize>,
    /// `μ_Y(Λⱼ)`.
    pub mass: S,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailModel<S> {
    /// Nothing left beyond the enumerated cells.
    Empty,
    /// `μ_Y(R > n) ≈ A qⁿ`.
    Geometric { ratio: S },
    /// `μ_Y(R > n) ≈ A n^{exponent}`.
    Polynomial { exponent: S },
    /// Too few tail values to fit; extrapolation off.
    Truncated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailRecord<S> {
    /// `μ_Y(R > maxR)`.
    pub mass: S,
    pub model: TailModel<S>,
    pub fit_r2: S,
}

/// Distance on the tower.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TowerMetric {
    /// `|Tⁱx − Tⁱx̃|` on a common cell and level, 1 otherwise.
    #[default]
    Rho1,
    /// `|x − x̃|` on a common cell and level, 1 otherwise.
    Rho2,
}

/// `F = T^R` on the enumerated cells.
#[derive(Clone, Debug)]
pub struct InducedMap<S: Real> {
    base: Interval<S>,
    starts: Vec<S>,
    branches: Vec<Branch<S>>,
}

impl<S: Real> InducedMap<S> {
    pub fn branches(&self) -> &[Branch<S>] {
        &self.branches
    }

    /// Index of the cell containing `x`.
    pub fn cell_index(&self, x: S) -> Option<usize> {
        let i = self.starts.partition_point(|&s| s <= x).checked_sub(1)?;
        self.branches[i].domain().contains(x).then_some(i)
    }

    pub fn forward(&self, x: S) -> Option<S> {
        self.cell_index(x).map(|i| self.branches[i].forward(x))
    }

    pub fn derivative(&self, x: S) -> Option<S> {
        self.cell_index(x).map(|i| self.branches[i].derivative(x))
    }

    /// Largest distance between a cell image endpoint and the base endpoints.
    ///
    /// Long excursions make `F` very steep, so this forward error grows with
    /// `|DF|` even when the cell is exact; see [`Self::bijectivity_backward_defect`].
    pub fn bijectivity_defect(&self) -> S {
        self.branches
            .iter()
            .map(|b| {
                let im = b.image();
                (im.lo - self.base.lo).abs().max((im.hi - self.base.hi).abs())
            })
            .fold(S::zero(), S::max)
    }

    /// Largest distance between `F⁻¹` of the base endpoints and the cell
    /// endpoints, measured in the domain.
    pub fn bijectivity_backward_defect(&self) -> S {
        self.branches
            .iter()
            .map(|b| {
                let d = b.domain();
                let (p, q) = (b.inverse(self.base.lo), b.inverse(self.base.hi));
                let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
                (lo - d.lo).abs().max((hi - d.hi).abs())
            })
            .fold(S::zero(), S::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TowerPoint<S> {
    pub x: S,
    pub level: usize,
}

#[derive(Clone, Debug)]
pub struct YoungTower<S: Real> {
    pub base_map: PiecewiseMap<S>,
    pub base: Interval<S>,
    /// `μ(Y)` in the reference measure.
    pub base_measure: S,
    /// Sorted left to right.
    pub cells: Vec<Cell<S>>,
    pub tail: TailRecord<S>,
    pub induced: InducedMap<S>,
    /// `𝓡 = Σ Rⱼ μ_Y(Λⱼ)` including the extrapolated tail; infinite when the
    /// tail is too heavy.
    pub kac: S,
    /// `Σ Rⱼ μ_Y(Λⱼ)` over the enumerated cells only.
    pub kac_enumerated: S,
    /// `λ₀`, the least `|DF|` over grids in every cell.
    pub base_expansion: S,
    pub metric: TowerMetric,
    pub max_return: usize,
}

fn apply_word<S: Real>(map: &PiecewiseMap<S>, word: &[usize], x: S) -> S {
    word.iter().fold(x, |y, &b| {
        let br = map.branch(b);
        br.forward(br.domain().clamp(y))
    })
}

fn induced_branch<S: Real>(map: &PiecewiseMap<S>, cell: &Cell<S>) -> Branch<S> {
    let (mf, md, mi) = (map.clone(), map.clone(), map.clone());
    let (wf, wd, wi) = (cell.word.clone(), cell.word.clone(), cell.word.clone());
    Branch::new(
        cell.interval,
        Arc::new(move |x| apply_word(&mf, &wf, x)),
        Arc::new(move |x| {
            let sign = wd
                .iter()
                .fold((S::one(), x), |(s, y), &b| {
                    let br = md.branch(b);
                    let y = br.domain().clamp(y);
                    (s * br.derivative(y).signum(), br.forward(y))
                })
                .0;
            sign * log_derivative_along(&md, &wd, x).exp()
        }),
        Arc::new(move |y| wi.iter().rev().fold(y, |z, &b| mi.branch(b).inverse(z))),
    )
}

fn fit_tail<S: Real>(tails: &[(usize, S)]) -> (TailModel<S>, S) {
    let pts: Vec<(S, S, S)> = tails
        .iter()
        .filter(|(_, t)| *t > S::lit(1e-13))
        .map(|&(n, t)| (S::lit(n as f64), S::lit(n as f64).ln(), t.ln()))
        .collect();
    if pts.len() < 3 {
        return (TailModel::Truncated, S::zero());
    }
    let ns: Vec<S> = pts.iter().map(|p| p.0).collect();
    let lns: Vec<S> = pts.iter().map(|p| p.1).collect();
    let lts: Vec<S> = pts.iter().map(|p| p.2).collect();
    let geo = fit_line(&ns, &lts);
    let poly = fit_line(&lns, &lts);
    match (geo, poly) {
        (Some(g), Some(p)) if g.r2 >= p.r2 => (TailModel::Geometric { ratio: g.slope.exp() }, g.r2),
        (_, Some(p)) => (TailModel::Polynomial { exponent: p.slope }, p.r2),
        (Some(g), None) => (TailModel::Geometric { ratio: g.slope.exp() }, g.r2),
        (None, None) => (TailModel::Truncated, S::zero()),
    }
}

/// `E[R; R > N]` under the fitted tail, given `T_N = μ_Y(R > N)`.
fn tail_kac<S: Real>(model: TailModel<S>, n: usize, t_n: S) -> S {
    if t_n <= S::zero() {
        return S::zero();
    }
    let nf = S::lit(n as f64);
    match model {
        TailModel::Empty => S::zero(),
        TailModel::Truncated => nf * t_n,
        TailModel::Geometric { ratio } if ratio < S::one() => nf * t_n + t_n / (S::one() - ratio),
        TailModel::Geometric { .. } => S::infinity(),
        TailModel::Polynomial { exponent } => {
            if exponent > S::lit(INFINITE_KAC_EXPONENT) {
                return S::infinity();
            }
            let s = -exponent;
            // Σ_{m ≥ N} A m^{-s} ≈ A N^{1-s}/(s-1) + A N^{-s}/2 with A N^{-s} = T_N
            nf * t_n + t_n * (nf / (s - S::one()) + S::half())
        }
    }
}

/// First-return tower over `base`, with cells of return time up to `max_r`.
pub fn induce_first_return<S: Real>(map: &PiecewiseMap<S>, base: Interval<S>, max_r: usize) -> Result<YoungTower<S>> {
    let phase = map.phase();
    let base = base.intersect(&phase).ok_or_else(|| Error::ParameterOutOfRange("base has no interior in the phase interval".into()))?;
    let base_measure = reference_measure(map, &base);
    if !(base_measure > S::zero()) {
        return Err(Error::ParameterOutOfRange("base has zero measure".into()));
    }
    if max_r == 0 {
        return Err(Error::ParameterOutOfRange("maxR must be positive".into()));
    }
    let mut cells = Vec::new();
    let mut frontier: Vec<(Interval<S>, Vec<usize>)> = vec![(base, Vec::new())];
    for n in 1..=max_r {
        let mut next = Vec::new();
        for (e, w) in &frontier {
            for b in 0..map.branch_count() {
                let Some(p) = map.branch(b).pull_back(e) else { continue };
                if !(p.width() > S::zero()) {
                    continue;
                }
                let mut word = Vec::with_capacity(w.len() + 1);
                word.push(b);
                word.extend_from_slice(w);
                if let Some(c) = p.intersect(&base) {
                    cells.push(Cell { interval: c, return_time: n, word: word.clone(), mass: reference_measure(map, &c) / base_measure });
                }
                if p.lo < base.lo {
                    next.push((Interval::new(p.lo, p.hi.min(base.lo)), word.clone()));
                }
                if p.hi > base.hi {
                    next.push((Interval::new(p.lo.max(base.hi), p.hi), word));
                }
            }
        }
        next.retain(|(i, _)| i.width() > S::zero());
        if next.len() > MAX_FRONTIER {
            next.sort_by(|a, b| b.0.width().partial_cmp(&a.0.width()).unwrap());
            next.truncate(MAX_FRONTIER);
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    cells.sort_by(|a, b| a.interval.lo.partial_cmp(&b.interval.lo).unwrap());

    let mut by_time = vec![S::zero(); max_r + 1];
    for c in &cells {
        by_time[c.return_time] += c.mass;
    }
    let mut tails = Vec::with_capacity(max_r);
    let mut acc = S::zero();
    for (n, &m) in by_time.iter().enumerate().skip(1) {
        acc += m;
        tails.push((n, (S::one() - acc).max(S::zero())));
    }
    let tail_mass = tails.last().map_or(S::zero(), |t| t.1);
    if tail_mass > S::lit(MAX_TAIL_MASS) {
        return Err(Error::TailTooHeavy { tail_mass: tail_mass.as_f64(), limit: MAX_TAIL_MASS });
    }
    let (model, fit_r2) = if tail_mass <= S::zero() {
        (TailModel::Empty, S::one())
    } else {
        let from = (max_r / 100).max(1);
        fit_tail(&tails[from - 1..])
    };
    let kac_enumerated: S = cells.iter().map(|c| S::lit(c.return_time as f64) * c.mass).sum();
    let kac = kac_enumerated + tail_kac(model, max_r, tail_mass);

    let mut base_expansion = S::infinity();
    for c in &cells {
        for k in 0..9 {
            let y = c.interval.lerp(S::lit(k as f64 / 8.0));
            base_expansion = base_expansion.min(log_derivative_along(map, &c.word, y).exp());
        }
    }
    let induced = InducedMap {
        base,
        starts: cells.iter().map(|c| c.interval.lo).collect(),
        branches: cells.iter().map(|c| induced_branch(map, c)).collect(),
    };
    Ok(YoungTower {
        base_map: map.clone(),
        base,
        base_measure,
        cells,
        tail: TailRecord { mass: tail_mass, model, fit_r2 },
        induced,
        kac,
        kac_enumerated,
        base_expansion,
        metric: TowerMetric::default(),
        max_return: max_r,
    })
}

impl<S: Real> YoungTower<S> {
    pub fn with_metric(mut self, metric: TowerMetric) -> Self {
        self.metric = metric;
        self
    }

    pub fn kac_is_infinite(&self) -> bool {
        !self.kac.is_finite()
    }

    /// `μ_Y(R > n)` from the enumerated cells.
    pub fn return_tail(&self, n: usize) -> S {
        let below: S = self.cells.iter().filter(|c| c.return_time <= n).map(|c| c.mass).sum();
        (S::one() - below).max(S::zero())
    }

    /// Log-log slope of `μ_Y(R > n)` over `lo..=hi`.
    pub fn tail_exponent(&self, lo: usize, hi: usize) -> Option<S> {
        let (xs, ys): (Vec<S>, Vec<S>) = (lo.max(1)..=hi.min(self.max_return))
            .map(|n| (n, self.return_tail(n)))
            .filter(|(_, t)| *t > S::zero())
            .map(|(n, t)| (S::lit(n as f64).ln(), t.ln()))
            .unzip();
        fit_line(&xs, &ys).map(|f| f.slope)
    }

    pub fn cell_index(&self, x: S) -> Option<usize> {
        self.induced.cell_index(x)
    }

    fn check(&self, p: &TowerPoint<S>) -> Result<usize> {
        let j = self
            .cell_index(p.x)
            .ok_or_else(|| Error::InvalidTowerPoint(format!("{} lies in no enumerated cell", p.x.as_f64())))?;
        if p.level >= self.cells[j].return_time {
            return Err(Error::InvalidTowerPoint(format!(
                "level {} not below return time {} of cell {j}",
                p.level, self.cells[j].return_time
            )));
        }
        Ok(j)
    }

    /// `π(x, i) = Tⁱx`.
    pub fn project(&self, p: &TowerPoint<S>) -> Result<S> {
        let j = self.check(p)?;
        Ok(apply_word(&self.base_map, &self.cells[j].word[..p.level], p.x))
    }

    /// Tower dynamics: up one level, or back to the base through `F`.
    pub fn step(&self, p: &TowerPoint<S>) -> Result<TowerPoint<S>> {
        let j = self.check(p)?;
        if p.level + 1 < self.cells[j].return_time {
            return Ok(TowerPoint { x: p.x, level: p.level + 1 });
        }
        let y = self.induced.branches[j].forward(p.x);
        let y = self.base.clamp(y);
        if self.cell_index(y).is_none() {
            return Err(Error::InvalidTowerPoint(format!("F({}) = {} falls in the truncated tail", p.x.as_f64(), y.as_f64())));
        }
        Ok(TowerPoint { x: y, level: 0 })
    }

    /// `ρ₁` or `ρ₂` according to the tower's metric.
    pub fn distance(&self, p: &TowerPoint<S>, q: &TowerPoint<S>) -> Result<S> {
        let (jp, jq) = (self.check(p)?, self.check(q)?);
        if p == q {
            return Ok(S::zero());
        }
        if jp != jq || p.level != q.level {
            return Ok(S::one());
        }
        Ok(match self.metric {
            TowerMetric::Rho1 => (self.project(p)? - self.project(q)?).abs(),
            TowerMetric::Rho2 => (p.x - q.x).abs(),
        })
    }

    /// Columns `cellIndex, left, right, R, mass`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["cellIndex", "left", "right", "R", "mass"]);
        for (j, c) in self.cells.iter().enumerate() {
            t.push(vec![
                j.to_string(),
                fmt_real(c.interval.lo.as_f64()),
                fmt_real(c.interval.hi.as_f64()),
                c.return_time.to_string(),
                fmt_real(c.mass.as_f64()),
            ]);
        }
        t
    }
}

/// Return-time sum and Lyapunov data of a tower.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KacReport<S> {
    /// `𝓡`; infinite in the σ-finite regime.
    pub kac: S,
    pub infinite: bool,
    pub lambda0: S,
    /// `λ₀^{1/𝓡}` (1 when `𝓡` is infinite).
    pub lambda_tower: S,
    /// `exp` of the Lyapunov exponent of the base map.
    pub lambda_birkhoff: S,
    /// `λ(μ) ≥ λ₀^{1/𝓡} − tol`.
    pub inequality_holds: bool,
}

/// `𝓡`, `λ₀^{1/𝓡}` and the directly measured `λ(μ)`.
///
/// `λ(μ)` comes from quadrature when the map has an analytic density and from
/// a Birkhoff average of `iterates` steps otherwise.
pub fn kac_and_lambda<S: Real>(tower: &YoungTower<S>, iterates: u64, seed: u64, tol: S) -> Result<KacReport<S>> {
    if tower.tail.mass >= S::lit(KAC_TAIL_MASS) {
        return Err(Error::TailTooHeavy { tail_mass: tower.tail.mass.as_f64(), limit: KAC_TAIL_MASS });
    }
    let map = &tower.base_map;
    let lyap = match map.density() {
        Some(d) if d.is_analytic() => mean_log_derivative(map)?,
        _ => lyapunov_exponent(map, 1000, iterates, seed)?,
    };
    let lambda_birkhoff = lyap.exp();
    let infinite = tower.kac_is_infinite();
    let lambda_tower = if infinite { S::one() } else { tower.base_expansion.powf(tower.kac.recip()) };
    Ok(KacReport {
        kac: tower.kac,
        infinite,
        lambda0: tower.base_expansion,
        lambda_tower,
        lambda_birkhoff,
        inequality_holds: lambda_birkhoff >= lambda_tower - tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulledBack<S> {
    /// `ν(A)`, normalised so `ν(whole) = 1` unless `sigma_finite`.
    pub value: S,
    /// `𝓡` is infinite; `value` is unnormalised (in units of `μ(Y)`).
    pub sigma_finite: bool,
}

/// `Σⱼ Σ_{i<Rⱼ} μ(T⁻ⁱA ∩ Λⱼ)` over the enumerated cells.
fn raw_pull_back<S: Real>(tower: &YoungTower<S>, a: &Interval<S>) -> S {
    let map = &tower.base_map;
    let mut total = S::zero();
    for c in &tower.cells {
        let mut image = c.interval;
        for i in 0..c.return_time {
            if let Some(hit) = image.intersect(a) {
                if hit.approx_eq(&image, S::zero()) {
                    total += c.mass;
                } else {
                    let mut sub = hit;
                    for &b in c.word[..i].iter().rev() {
                        match map.branch(b).pull_back(&sub) {
                            Some(s) => sub = s,
                            None => break,
                        }
                    }
                    total += reference_measure(map, &sub) / tower.base_measure;
                }
            }
            image = map.branch(c.word[i]).push_forward(&image);
        }
    }
    total
}

/// The pulled-back measure `ν` of a union of disjoint intervals.
///
/// Cells beyond `maxR` are not enumerated; normalising by the enumerated
/// return-time sum spreads their share proportionally.
pub fn pull_back_measure_union<S: Real>(tower: &YoungTower<S>, sets: &[Interval<S>]) -> PulledBack<S> {
    let raw: S = sets.iter().map(|a| raw_pull_back(tower, a)).sum();
    if tower.kac_is_infinite() {
        PulledBack { value: raw, sigma_finite: true }
    } else {
        PulledBack { value: raw / tower.kac_enumerated, sigma_finite: false }
    }
}

/// `ν(A)`; `None` is the empty set.
pub fn pull_back_measure<S: Real>(tower: &YoungTower<S>, a: Option<Interval<S>>) -> PulledBack<S> {
    match a {
        Some(a) => pull_back_measure_union(tower, &[a]),
        None => PulledBack { value: S::zero(), sigma_finite: tower.kac_is_infinite() },
    }
}

/// `|ν(A) − ν(T⁻¹A)|`.
pub fn invariance_defect<S: Real>(tower: &YoungTower<S>, a: Interval<S>) -> S {
    let pre: Vec<Interval<S>> = tower.base_map.branches().iter().filter_map(|b| b.pull_back(&a)).collect();
    (pull_back_measure(tower, Some(a)).value - pull_back_measure_union(tower, &pre).value).abs()
}
