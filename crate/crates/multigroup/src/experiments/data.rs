//! Synthetic designs: a piecewise-constant target on the line, a piecewise
//! uniform feature density, and an interval group family.

use multigroup_core::{Dataset, GroupFamily, Indicator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// `values[k]` on `[breaks[k-1], breaks[k])`, with `breaks[-1] = -inf` and
/// `breaks[len] = +inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::usage("need one more value than breakpoints"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::usage("breakpoints must be strictly increasing"));
        }
        Ok(PiecewiseConstant { breaks, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= x)]
    }
}

/// Feature density: segment `(lo, hi)` is chosen with probability
/// proportional to its weight, then `x` is uniform on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub target: PiecewiseConstant,
    pub segments: Vec<(f64, f64, f64)>,
}

impl Design {
    pub fn uniform(target: PiecewiseConstant, lo: f64, hi: f64) -> Self {
        Design {
            target,
            segments: vec![(lo, hi, 1.0)],
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        let lo = self.segments.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = self.segments.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    fn sample_x(&self, rng: &mut ChaCha8Rng) -> f64 {
        let total: f64 = self.segments.iter().map(|s| s.2).sum();
        let mut u = rng.random::<f64>() * total;
        let mut seg = self.segments[self.segments.len() - 1];
        for &s in &self.segments {
            if u < s.2 {
                seg = s;
                break;
            }
            u -= s.2;
        }
        seg.0 + (seg.1 - seg.0) * rng.random::<f64>()
    }

    /// `n` records with `y = target(x) + N(0, noise_sd^2)`.
    pub fn sample(&self, n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::usage("sample size must be at least 1"));
        }
        let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::usage(format!("noise: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.sample_x(&mut rng);
            let e = if noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            xs.push(x);
            ys.push(self.target.eval(x) + e);
        }
        Ok(Dataset::from_xy(&xs, &ys)?)
    }
}

pub const SPATIAL_NOISE: f64 = 0.1;
pub const UNBALANCED_NOISE: f64 = 0.2;
pub const CRITERION_NOISE: f64 = 0.3;

/// Default spatial target: a four-piece step function on `[0, 1]`.
pub fn spatial_target() -> PiecewiseConstant {
    PiecewiseConstant {
        breaks: vec![0.3, 0.45, 0.7],
        values: vec![0.2, 0.8, 0.5, 0.9],
    }
}

pub fn spatial_design() -> Design {
    Design::uniform(spatial_target(), 0.0, 1.0)
}

/// `x ~ U[0, 1]`, default four-piece target, Normal noise.
pub fn gen_spatial(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    spatial_design().sample(n, noise_sd, seed)
}

/// Closed intervals `[c - l/2, c + l/2]` for every center `c` on the grid of
/// `[0, 1]` with spacing `center_step` and every length `l` on the grid of
/// `(0, 1]` with spacing `length_step`; center-major order.
pub fn interval_grid_groups(center_step: f64, length_step: f64) -> Result<GroupFamily> {
    let cells = |step: f64| -> Result<usize> {
        let k = (1.0 / step).round();
        if !(step > 0.0) || k < 1.0 || ((1.0 / step) - k).abs() > 1e-9 {
            return Err(Error::usage(format!("step {step} does not divide 1 evenly")));
        }
        Ok(k as usize)
    };
    let (nc, nl) = (cells(center_step)?, cells(length_step)?);
    let mut groups = Vec::with_capacity((nc + 1) * nl);
    for i in 0..=nc {
        let c = i as f64 / nc as f64;
        for j in 1..=nl {
            let half = j as f64 / nl as f64 / 2.0;
            groups.push(Indicator::interval(c - half, c + half));
        }
    }
    Ok(GroupFamily::new(groups)?)
}

/// Unbalanced design on `[0, 1]`: group 1 is the domain, groups 2 and 3 are
/// its halves and groups 4 to 7 are the quarters of group 3 only.
pub fn unbalanced_design() -> Design {
    Design::uniform(
        PiecewiseConstant {
            breaks: vec![0.5, 0.625, 0.75, 0.875],
            values: vec![0.3, 0.45, 0.8, 0.55, 0.95],
        },
        0.0,
        1.0,
    )
}

pub fn unbalanced_groups() -> GroupFamily {
    GroupFamily::new(vec![
        Indicator::All,
        Indicator::half_open(0.0, 0.5),
        Indicator::interval(0.5, 1.0),
        Indicator::half_open(0.5, 0.625),
        Indicator::half_open(0.625, 0.75),
        Indicator::half_open(0.75, 0.875),
        Indicator::interval(0.875, 1.0),
    ])
    .expect("non-empty family")
}

pub fn gen_unbalanced(n: usize, seed: u64) -> Result<(Dataset, GroupFamily)> {
    gen_unbalanced_with(n, UNBALANCED_NOISE, seed)
}

pub fn gen_unbalanced_with(n: usize, noise_sd: f64, seed: u64) -> Result<(Dataset, GroupFamily)> {
    if n < 8 {
        return Err(Error::usage("the unbalanced design needs n >= 8"));
    }
    Ok((unbalanced_design().sample(n, noise_sd, seed)?, unbalanced_groups()))
}

/// Criterion-selection design on `[0, 5]`. Segment shares are 25%, 10%, 45%
/// and 20% with targets 4.6, 4.9, 4.1 and 2.6, so most labels sit near 4.1
/// and the ERM constant is close to 4. Groups: `[0, 5]`, `[0, 2)`, `[2, 5]`
/// and `[2, 3)`. Fitting group 3 pulls `[2, 3)` down, away from group 4's
/// target.
pub fn criterion_design() -> Design {
    Design {
        target: PiecewiseConstant {
            breaks: vec![2.0, 3.0, 4.0],
            values: vec![4.6, 4.9, 4.1, 2.6],
        },
        segments: vec![(0.0, 2.0, 0.25), (2.0, 3.0, 0.10), (3.0, 4.0, 0.45), (4.0, 5.0, 0.20)],
    }
}

pub fn criterion_groups() -> GroupFamily {
    GroupFamily::new(vec![
        Indicator::interval(0.0, 5.0),
        Indicator::half_open(0.0, 2.0),
        Indicator::interval(2.0, 5.0),
        Indicator::half_open(2.0, 3.0),
    ])
    .expect("non-empty family")
}

pub const CRITERION_LARGE_N: usize = 26_000;
pub const CRITERION_SMALL_N: usize = 260;

pub fn gen_criterion(n: usize, seed: u64) -> Result<(Dataset, GroupFamily)> {
    gen_criterion_with(n, CRITERION_NOISE, seed)
}

pub fn gen_criterion_with(n: usize, noise_sd: f64, seed: u64) -> Result<(Dataset, GroupFamily)> {
    if n < 10 {
        return Err(Error::usage("the criterion design needs n >= 10"));
    }
    Ok((criterion_design().sample(n, noise_sd, seed)?, criterion_groups()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_labels_equal_target() {
        let d = gen_spatial(300, 0.0, 4).unwrap();
        let t = spatial_target();
        assert!(d.iter().all(|r| r.y == t.eval(r.x[0])));
        assert!(d.iter().all(|r| (0.0..=1.0).contains(&r.x[0])));
    }

    #[test]
    fn same_seed_same_data() {
        let a = gen_spatial(200, SPATIAL_NOISE, 9).unwrap();
        let b = gen_spatial(200, SPATIAL_NOISE, 9).unwrap();
        let c = gen_spatial(200, SPATIAL_NOISE, 10).unwrap();
        assert_eq!(a.records(), b.records());
        assert_ne!(a.records(), c.records());
    }

    #[test]
    fn interval_grid_has_420_groups() {
        let g = interval_grid_groups(0.05, 0.05).unwrap();
        assert_eq!(g.len(), 21 * 20);
        // c = 0.5, l = 1 covers [0, 1]
        let full = g.iter().find(|grp| grp.id == 10 * 20 + 19).unwrap();
        assert!(full.contains(&[0.0]) && full.contains(&[1.0]));
        // c = 0, l = 0.05 covers [-0.025, 0.025]
        let first = g.get(0);
        assert!(first.contains(&[0.025]) && !first.contains(&[0.026]));
        assert!(interval_grid_groups(0.3, 0.05).is_err());
    }

    #[test]
    fn unbalanced_structure() {
        let (d, g) = gen_unbalanced(120, 3).unwrap();
        let masks = g.masks(&d);
        assert_eq!(masks[0].count(), 120);
        for i in 0..d.len() {
            let fine: usize = (3..7).filter(|&k| masks[k].get(i)).count();
            assert_eq!(fine, usize::from(masks[2].get(i)));
            assert!(!(masks[1].get(i) && masks[2].get(i)));
            assert!(masks[1].get(i) || masks[2].get(i));
        }
        assert!(gen_unbalanced(7, 0).is_err());
    }

    #[test]
    fn criterion_group_four_is_smallest() {
        for seed in 0..5 {
            let (d, g) = gen_criterion(CRITERION_SMALL_N, seed).unwrap();
            let counts: Vec<usize> = g.masks(&d).iter().map(|m| m.count()).collect();
            assert_eq!(counts.iter().min(), Some(&counts[3]), "{counts:?}");
        }
        let (d, _) = gen_criterion(CRITERION_LARGE_N, 1).unwrap();
        let near = d.iter().filter(|r| (r.y - 4.1).abs() < 0.5).count();
        assert!(near * 2 > d.len());
    }

    #[test]
    fn piecewise_lookup() {
        let t = PiecewiseConstant::new(vec![1.0, 2.0], vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.eval(0.5), 0.0);
        assert_eq!(t.eval(1.0), 1.0);
        assert_eq!(t.eval(5.0), 2.0);
        assert!(PiecewiseConstant::new(vec![1.0], vec![0.0]).is_err());
    }
}
