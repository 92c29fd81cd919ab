//! Hofbauer's canonical Markov extension.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::young::reference_measure;
use crate::dynamics::{Interval, PiecewiseMap};
use crate::error::{Error, Result};
use crate::report::{fmt_real, Table};
use crate::scalar::Real;

/// Largest depth accepted by [`hofbauer_build`].
pub const MAX_HOFBAUER_DEPTH: usize = 24;
/// Two levels are the same interval when their endpoints agree to this.
pub const IDENTIFICATION_TOL: f64 = 1e-9;
/// Default orbit length for the lifted measure.
pub const LIFT_STEPS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level<S> {
    pub interval: Interval<S>,
    /// BFS depth at which the interval first appeared; 0 is the base.
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HofbauerTower<S> {
    pub levels: Vec<Level<S>>,
    /// `transitions[level][branch]`: level of `closure T(D ∩ Pᵦ)`, `None`
    /// when the intersection is empty or lies past the build depth.
    pub transitions: Vec<Vec<Option<usize>>>,
    pub depth: usize,
    /// Occupation frequency of each level along a lifted orbit.
    pub lifted_mass: Vec<S>,
    /// Lifted-orbit steps that left the explored part and restarted at the base.
    pub escapes: u64,
}

impl<S: Real> HofbauerTower<S> {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Lines `levelFrom cellLabel levelTo`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (from, row) in self.transitions.iter().enumerate() {
            for (b, to) in row.iter().enumerate() {
                if let Some(to) = to {
                    out.push_str(&format!("{from} {b} {to}\n"));
                }
            }
        }
        out
    }

    /// Columns `level, depth, left, right, mass`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["level", "depth", "left", "right", "mass"]);
        for (i, l) in self.levels.iter().enumerate() {
            t.push(vec![
                i.to_string(),
                l.depth.to_string(),
                fmt_real(l.interval.lo.as_f64()),
                fmt_real(l.interval.hi.as_f64()),
                fmt_real(self.lifted_mass.get(i).map_or(0.0, |m| m.as_f64())),
            ]);
        }
        t
    }

    /// Largest endpoint gap between `closure T(D ∩ Pᵦ)` and its target level.
    pub fn markov_defect(&self, map: &PiecewiseMap<S>) -> S {
        let mut worst = S::zero();
        for (from, row) in self.transitions.iter().enumerate() {
            for (b, to) in row.iter().enumerate() {
                let Some(to) = to else { continue };
                let br = map.branch(b);
                let Some(cut) = self.levels[from].interval.intersect(&br.domain()) else { continue };
                let img = br.push_forward(&cut);
                let target = self.levels[*to].interval;
                worst = worst.max((img.lo - target.lo).abs()).max((img.hi - target.hi).abs());
            }
        }
        worst
    }
}

/// Breadth-first level enumeration down to `depth`, with the lifted measure
/// from a `LIFT_STEPS`-step orbit.
pub fn hofbauer_build<S: Real>(map: &PiecewiseMap<S>, depth: usize) -> Result<HofbauerTower<S>> {
    hofbauer_build_with(map, depth, LIFT_STEPS, 0)
}

pub fn hofbauer_build_with<S: Real>(map: &PiecewiseMap<S>, depth: usize, steps: u64, seed: u64) -> Result<HofbauerTower<S>> {
    if depth > MAX_HOFBAUER_DEPTH {
        return Err(Error::ParameterOutOfRange(format!("Hofbauer depth {depth} exceeds {MAX_HOFBAUER_DEPTH}")));
    }
    let tol = S::tol(IDENTIFICATION_TOL) * map.phase().width();
    let mut levels = vec![Level { interval: map.phase(), depth: 0 }];
    let mut transitions: Vec<Vec<Option<usize>>> = vec![vec![None; map.branch_count()]];
    let mut queue = VecDeque::from([0usize]);
    while let Some(l) = queue.pop_front() {
        let d = levels[l].depth;
        if d >= depth {
            continue;
        }
        for b in 0..map.branch_count() {
            let br = map.branch(b);
            let Some(cut) = levels[l].interval.intersect(&br.domain()) else { continue };
            let img = br.push_forward(&cut);
            let target = match levels.iter().skip(1).position(|lv| lv.interval.approx_eq(&img, tol)) {
                Some(i) => i + 1,
                None => {
                    levels.push(Level { interval: img, depth: d + 1 });
                    transitions.push(vec![None; map.branch_count()]);
                    queue.push_back(levels.len() - 1);
                    levels.len() - 1
                }
            };
            transitions[l][b] = Some(target);
        }
    }
    let mut tower = HofbauerTower { levels, transitions, depth, lifted_mass: Vec::new(), escapes: 0 };
    let (mass, escapes) = lift_occupation(&tower, map, steps, seed)?;
    tower.lifted_mass = mass;
    tower.escapes = escapes;
    Ok(tower)
}

fn fresh_point<S: Real>(map: &PiecewiseMap<S>, rng: &mut ChaCha8Rng) -> Result<S> {
    match map.density() {
        Some(d) => d.sample(rng),
        None => Ok(map.phase().lerp(S::lit(rng.gen::<f64>()))),
    }
}

/// Occupation frequencies of a lifted orbit started at the base.
pub fn lift_occupation<S: Real>(tower: &HofbauerTower<S>, map: &PiecewiseMap<S>, steps: u64, seed: u64) -> Result<(Vec<S>, u64)> {
    if steps == 0 {
        return Err(Error::InsufficientData("lifted orbit needs at least one step".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; tower.levels.len()];
    let mut escapes = 0u64;
    let mut x = fresh_point(map, &mut rng)?;
    let mut level = 0usize;
    for _ in 0..steps {
        counts[level] += 1;
        let b = map.branch_index(x).ok_or(Error::OrbitEscaped { step: 0, x: x.as_f64() })?;
        let next = map.forward(x);
        match tower.transitions[level][b] {
            Some(t) if next != x => {
                level = t;
                x = next;
            }
            _ => {
                // past the explored depth, or stuck on a floating-point fixed point
                escapes += 1;
                level = 0;
                x = fresh_point(map, &mut rng)?;
            }
        }
    }
    let total = S::lit(steps as f64);
    Ok((counts.into_iter().map(|c| S::lit(c as f64) / total).collect(), escapes))
}

/// Largest change in level occupation when the orbit length doubles.
pub fn stationarity_defect<S: Real>(tower: &HofbauerTower<S>, map: &PiecewiseMap<S>, steps: u64, seed: u64) -> Result<S> {
    let (a, _) = lift_occupation(tower, map, steps, seed)?;
    let (b, _) = lift_occupation(tower, map, 2 * steps, seed)?;
    Ok(a.iter().zip(&b).map(|(&u, &v)| (u - v).abs()).fold(S::zero(), S::max))
}

/// `μ` of each level interval, for comparison with the lifted masses.
pub fn level_measures<S: Real>(tower: &HofbauerTower<S>, map: &PiecewiseMap<S>) -> Vec<S> {
    tower.levels.iter().map(|l| reference_measure(map, &l.interval)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{enumerate_cylinders, Builtin};

    /// Distinct closures `Tⁿ(P)`, `P ∈ 𝓟ₙ`, `1 ≤ n ≤ depth`, plus the base.
    fn brute_force_levels(map: &PiecewiseMap<f64>, depth: usize) -> usize {
        let mut seen: Vec<Interval<f64>> = Vec::new();
        for n in 1..=depth {
            for cyl in enumerate_cylinders(map, n) {
                let (mut a, mut b) = (cyl.interval.lo, cyl.interval.hi);
                for &w in &cyl.word {
                    let br = map.branch(w);
                    a = br.forward(br.domain().clamp(a));
                    b = br.forward(br.domain().clamp(b));
                }
                let img = Interval::new(a, b);
                if !seen.iter().any(|s| s.approx_eq(&img, 1e-9)) {
                    seen.push(img);
                }
            }
        }
        seen.len() + 1
    }

    #[test]
    fn full_maps_have_two_levels() {
        for b in [Builtin::Tent { slope: 2.0 }, Builtin::Quadratic { a: 2.0 }] {
            let m = PiecewiseMap::<f64>::builtin(b).unwrap();
            let t = hofbauer_build_with(&m, 10, 10_000, 1).unwrap();
            assert_eq!(t.level_count(), 2);
            assert_eq!(brute_force_levels(&m, 10), 2);
        }
    }

    #[test]
    fn quadratic_levels_match_brute_force() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 1.7 }).unwrap();
        let t = hofbauer_build_with(&m, 16, 100_000, 2).unwrap();
        assert_eq!(t.level_count(), brute_force_levels(&m, 16));
        assert!(t.markov_defect(&m) < 1e-9);
        // level endpoints lie on the forward orbit of the critical value
        let mut orbit = vec![1.0f64];
        for _ in 0..20 {
            orbit.push(m.forward(*orbit.last().unwrap()));
        }
        orbit.push(-1.0);
        for l in &t.levels[1..] {
            for e in [l.interval.lo, l.interval.hi] {
                assert!(orbit.iter().any(|&c| (c - e).abs() < 1e-9), "endpoint {e}");
            }
        }
    }

    #[test]
    fn lifted_measure_is_stationary() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 1.7 }).unwrap();
        let t = hofbauer_build_with(&m, 12, 200_000, 3).unwrap();
        assert!((t.lifted_mass.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(stationarity_defect(&t, &m, 500_000, 4).unwrap() < 0.02);
    }

    #[test]
    fn exports() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Tent { slope: 2.0 }).unwrap();
        let t = hofbauer_build_with(&m, 4, 1000, 5).unwrap();
        assert_eq!(t.to_edge_list(), "0 0 1\n0 1 1\n1 0 1\n1 1 1\n");
        assert_eq!(t.to_table().rows.len(), 2);
        assert!(hofbauer_build(&m, 25).is_err());
    }
}
