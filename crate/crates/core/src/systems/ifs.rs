//! Similarity iterated function systems `θ_i(x) = r_i x + t_i` on the line.

use rug::Rational;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMap {
    pub ratio: Rational,
    pub translation: Rational,
}

impl SimilarityMap {
    pub fn apply(&self, x: &Rational) -> Rational {
        Rational::from(&self.ratio * x) + &self.translation
    }

    pub fn fixed_point(&self) -> Rational {
        &self.translation / Rational::from(1 - &self.ratio)
    }
}

#[derive(Clone, Debug)]
pub struct IfsSystem {
    maps: Vec<SimilarityMap>,
    delta: f64,
    delta_is_one: bool,
    weights: Vec<f64>,
    equal_ratios: bool,
    hull: (Rational, Rational),
    cells: Vec<(Rational, Rational)>,
}

impl IfsSystem {
    /// Builds the system and checks the open set condition through the
    /// hull: the images `θ_i(hull)` must have pairwise disjoint interiors.
    pub fn new(maps: Vec<SimilarityMap>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::invalid("system", "an IFS needs at least two maps"));
        }
        for m in &maps {
            if m.ratio <= 0 || m.ratio >= 1 {
                return Err(Error::invalid("system", "IFS ratios must lie in (0, 1)"));
            }
        }
        let fixed: Vec<Rational> = maps.iter().map(SimilarityMap::fixed_point).collect();
        let lo = fixed.iter().min().unwrap().clone();
        let hi = fixed.iter().max().unwrap().clone();
        let mut cells: Vec<(Rational, Rational)> = maps
            .iter()
            .map(|m| (m.apply(&lo), m.apply(&hi)))
            .collect();
        let mut order: Vec<usize> = (0..maps.len()).collect();
        order.sort_by(|&a, &b| cells[a].0.cmp(&cells[b].0));
        for w in order.windows(2) {
            if cells[w[0]].1 > cells[w[1]].0 {
                return Err(Error::invalid(
                    "system",
                    format!(
                        "open set condition fails: images of maps {} and {} overlap",
                        w[0] + 1,
                        w[1] + 1
                    ),
                ));
            }
        }
        // Branches are numbered left to right so words order like intervals.
        let maps: Vec<SimilarityMap> = order.iter().map(|&i| maps[i].clone()).collect();
        cells = order.iter().map(|&i| cells[i].clone()).collect();

        let ratios: Vec<f64> = maps.iter().map(|m| m.ratio.to_f64()).collect();
        let equal_ratios = maps.iter().all(|m| m.ratio == maps[0].ratio);
        let sum: Rational = maps.iter().map(|m| m.ratio.clone()).sum();
        let delta_is_one = sum == 1;
        let delta = if delta_is_one {
            1.0
        } else if equal_ratios {
            (maps.len() as f64).ln() / (1.0 / ratios[0]).ln()
        } else {
            solve_dimension(&ratios)
        };
        let weights = if equal_ratios {
            vec![1.0 / maps.len() as f64; maps.len()]
        } else {
            ratios.iter().map(|r| r.powf(delta)).collect()
        };
        Ok(IfsSystem {
            maps,
            delta,
            delta_is_one,
            weights,
            equal_ratios,
            hull: (lo, hi),
            cells,
        })
    }

    pub fn cantor3() -> Self {
        Self::new(vec![
            SimilarityMap {
                ratio: Rational::from((1, 3)),
                translation: Rational::new(),
            },
            SimilarityMap {
                ratio: Rational::from((1, 3)),
                translation: Rational::from((2, 3)),
            },
        ])
        .expect("middle-thirds Cantor set")
    }

    pub fn maps(&self) -> &[SimilarityMap] {
        &self.maps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_is_one(&self) -> bool {
        self.delta_is_one
    }

    /// `μ(X_i) = r_i^δ`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn equal_ratios(&self) -> bool {
        self.equal_ratios
    }

    pub fn hull(&self) -> &(Rational, Rational) {
        &self.hull
    }

    pub fn hull_len(&self) -> Rational {
        Rational::from(&self.hull.1 - &self.hull.0)
    }

    /// `θ_i(hull)`, the convex hull of the branch cell `X_i`.
    pub fn cells(&self) -> &[(Rational, Rational)] {
        &self.cells
    }

    pub fn r_max(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio.to_f64()).fold(0.0, f64::max)
    }

    pub fn r_min(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio.to_f64()).fold(1.0, f64::min)
    }

    /// `θ_w(hull)` for a word `w`.
    pub fn word_interval(&self, word: &[u64]) -> (Rational, Rational) {
        let (mut a, mut b) = self.hull.clone();
        for &i in word.iter().rev() {
            let m = &self.maps[i as usize];
            a = m.apply(&a);
            b = m.apply(&b);
        }
        (a, b)
    }

    /// `r_w = Π r_{w_k}`.
    pub fn word_ratio(&self, word: &[u64]) -> Rational {
        word.iter()
            .fold(Rational::from(1), |acc, &i| acc * &self.maps[i as usize].ratio)
    }

    /// `μ(X_w) = Π r_{w_k}^δ`.
    pub fn word_weight(&self, word: &[u64]) -> f64 {
        word.iter().map(|&i| self.weights[i as usize]).product()
    }
}

/// Root of `Σ r_i^δ = 1` by bisection; the left side is decreasing in δ.
pub fn solve_dimension(ratios: &[f64]) -> f64 {
    let f = |d: f64| ratios.iter().map(|r| r.powf(d)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
