//! Fitting the constant of the probability-normalization function.
//!
//! Each candidate `f_c` should stay close to the identity on `[0.2, 0.8]`
//! while saturating at 1. The constant is chosen by Nelder–Mead on the sum of
//! squared differences `Σ (f_c(x) - x)²` over a uniform grid.

/// Candidate normalization families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidate {
    /// `1 - c^(-x)`
    ExpBase,
    /// `1 - (x + 1)^(-c)`
    Power,
    /// `tanh(c x)`
    Tanh,
}

impl Candidate {
    pub const ALL: [Candidate; 3] = [Candidate::ExpBase, Candidate::Power, Candidate::Tanh];

    pub fn eval(self, c: f64, x: f64) -> f64 {
        match self {
            Candidate::ExpBase => 1.0 - c.powf(-x),
            Candidate::Power => 1.0 - (x + 1.0).powf(-c),
            Candidate::Tanh => (c * x).tanh(),
        }
    }

    fn start(self) -> f64 {
        match self {
            Candidate::ExpBase => 3.0,
            Candidate::Power => 1.5,
            Candidate::Tanh => 1.5,
        }
    }
}

pub const FIT_LO: f64 = 0.2;
pub const FIT_HI: f64 = 0.8;
/// Grid spacing 0.001 over the fitting interval.
pub const FIT_POINTS: usize = 601;

/// Sum of squared deviations from the identity on the fitting grid.
pub fn fit_objective(candidate: Candidate, c: f64) -> f64 {
    (0..FIT_POINTS)
        .map(|k| {
            let x = FIT_LO + (FIT_HI - FIT_LO) * k as f64 / (FIT_POINTS - 1) as f64;
            let d = candidate.eval(c, x) - x;
            d * d
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub candidate: Candidate,
    pub c: f64,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn fit_normalization_constant(candidate: Candidate) -> FitResult {
    let res = nelder_mead(
        |x| {
            let v = fit_objective(candidate, x[0]);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        },
        &[candidate.start()],
        &NelderMeadOptions::default(),
    );
    FitResult {
        candidate,
        c: res.x[0],
        sse: res.fx,
        iterations: res.iterations,
        converged: res.converged,
    }
}

/// Fits every candidate; the first element has the smallest SSE.
pub fn rank_candidates() -> Vec<FitResult> {
    let mut all: Vec<FitResult> = Candidate::ALL
        .iter()
        .map(|&c| fit_normalization_constant(c))
        .collect();
    all.sort_by(|a, b| a.sse.total_cmp(&b.sse));
    all
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop when the simplex spread in x and f both fall below these.
    pub x_tol: f64,
    pub f_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            x_tol: 1e-10,
            f_tol: 1e-14,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    /// False when `max_iterations` ran out; `x` is then the best vertex seen.
    pub converged: bool,
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2).
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += if v[i] != 0.0 {
            opts.initial_step * v[i].abs()
        } else {
            opts.initial_step
        };
        let fv = f(&v);
        simplex.push((v, fv));
    }

    let point = |base: &[f64], dir: &[f64], t: f64| -> Vec<f64> {
        base.iter().zip(dir).map(|(b, d)| b + t * (d - b)).collect()
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_spread = (simplex[n].1 - simplex[0].1).abs();
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = point(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);

        if fr < simplex[0].1 {
            let expanded = point(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (towards, ft) = if fr < worst.1 {
                (&reflected, fr)
            } else {
                (&worst.0, worst.1)
            };
            let contracted = point(&centroid, towards, 0.5);
            let fc = f(&contracted);
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v = point(&best, &vertex.0, 0.5);
                    let fv = f(&v);
                    *vertex = (v, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        fx,
        iterations,
        converged,
    }
}
