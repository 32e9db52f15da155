//! Fitting per-type and per-class weights to target marginals.
//!
//! Each target admits only some (error type, transition class) pairs. A
//! phantom draw for target i picks pair (t, c) with probability proportional
//! to `a[t] * b[c]` over its admissible pairs. Iterative proportional fitting
//! adjusts `a` and `b` until the population-average type and class marginals
//! match the requested profiles, or until it stops improving when the
//! profiles are not jointly attainable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const N_TYPES: usize = 8;
pub const N_CLASSES: usize = 3;

/// Admissible (type, class) pairs for one target, as a bitmask per type.
pub type Feasible = [u8; N_TYPES];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub type_weights: [f64; N_TYPES],
    pub class_weights: [f64; N_CLASSES],
    /// Marginals the fitted weights produce over the calibration population.
    pub achieved_types: [f64; N_TYPES],
    pub achieved_classes: [f64; N_CLASSES],
    pub iterations: usize,
}

impl Calibration {
    /// Use the profiles as weights directly, without fitting.
    pub fn uncalibrated(types: &[f64; N_TYPES], classes: &[f64; N_CLASSES]) -> Self {
        Calibration {
            type_weights: *types,
            class_weights: *classes,
            achieved_types: *types,
            achieved_classes: *classes,
            iterations: 0,
        }
    }

    /// Per-pair draw probabilities for one target; all zero when nothing
    /// admissible carries weight.
    pub fn pair_probabilities(&self, feasible: &Feasible) -> [[f64; N_CLASSES]; N_TYPES] {
        pair_probabilities(&self.type_weights, &self.class_weights, feasible)
    }

    /// Largest absolute gap between achieved and requested marginals.
    pub fn max_error(&self, types: &[f64; N_TYPES], classes: &[f64; N_CLASSES]) -> f64 {
        let t = self.achieved_types.iter().zip(types).map(|(a, b)| (a - b).abs());
        let c = self.achieved_classes.iter().zip(classes).map(|(a, b)| (a - b).abs());
        t.chain(c).fold(0.0, f64::max)
    }
}

fn pair_probabilities(a: &[f64; N_TYPES], b: &[f64; N_CLASSES], feasible: &Feasible) -> [[f64; N_CLASSES]; N_TYPES] {
    let mut p = [[0.0; N_CLASSES]; N_TYPES];
    let mut z = 0.0;
    for t in 0..N_TYPES {
        for c in 0..N_CLASSES {
            if feasible[t] & (1 << c) != 0 {
                p[t][c] = a[t] * b[c];
                z += p[t][c];
            }
        }
    }
    if z > 0.0 {
        for row in &mut p {
            for v in row {
                *v /= z;
            }
        }
    }
    p
}

fn marginals(a: &[f64; N_TYPES], b: &[f64; N_CLASSES], pop: &BTreeMap<Feasible, usize>) -> ([f64; N_TYPES], [f64; N_CLASSES]) {
    let mut mt = [0.0; N_TYPES];
    let mut mc = [0.0; N_CLASSES];
    let mut n = 0.0;
    for (f, &count) in pop {
        let p = pair_probabilities(a, b, f);
        let mass: f64 = p.iter().flatten().sum();
        if mass == 0.0 {
            continue;
        }
        n += count as f64;
        for t in 0..N_TYPES {
            for c in 0..N_CLASSES {
                mt[t] += count as f64 * p[t][c];
                mc[c] += count as f64 * p[t][c];
            }
        }
    }
    if n > 0.0 {
        mt.iter_mut().for_each(|v| *v /= n);
        mc.iter_mut().for_each(|v| *v /= n);
    }
    (mt, mc)
}

/// Rescale to unit sum, keeping weights with a positive target away from
/// zero. Unattainable profiles push some weights geometrically towards zero
/// and would otherwise underflow.
fn normalize<const N: usize>(w: &mut [f64; N], target: &[f64; N]) {
    let sum: f64 = w.iter().sum();
    if sum > 0.0 {
        for (x, t) in w.iter_mut().zip(target) {
            *x /= sum;
            if *t > 0.0 {
                *x = x.max(1e-12);
            }
        }
    }
}

/// Fit weights over a population of targets given by their admissible sets.
pub fn calibrate<'a>(
    population: impl IntoIterator<Item = &'a Feasible>,
    types: &[f64; N_TYPES],
    classes: &[f64; N_CLASSES],
    max_iterations: usize,
    tolerance: f64,
) -> Calibration {
    let mut pop: BTreeMap<Feasible, usize> = BTreeMap::new();
    for f in population {
        if f.iter().any(|&m| m != 0) {
            *pop.entry(*f).or_default() += 1;
        }
    }
    let mut a = *types;
    let mut b = *classes;
    let mut iterations = 0;
    let (mut mt, mut mc) = marginals(&a, &b, &pop);
    while iterations < max_iterations {
        let err = mt.iter().zip(types).chain(mc.iter().zip(classes)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if err <= tolerance {
            break;
        }
        iterations += 1;
        for t in 0..N_TYPES {
            if mt[t] > 0.0 {
                a[t] *= types[t] / mt[t];
            }
        }
        let (_, mc_now) = marginals(&a, &b, &pop);
        for c in 0..N_CLASSES {
            if mc_now[c] > 0.0 {
                b[c] *= classes[c] / mc_now[c];
            }
        }
        normalize(&mut a, types);
        normalize(&mut b, classes);
        (mt, mc) = marginals(&a, &b, &pop);
    }
    Calibration { type_weights: a, class_weights: b, achieved_types: mt, achieved_classes: mc, iterations }
}
