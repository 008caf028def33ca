//! Box-constrained Nelder-Mead simplex search and Latin-hypercube sampling.
//!
//! The calibration objective is a deterministic simulation output with no
//! gradients, so a derivative-free local search restarted from a space-filling
//! sample of the box is the whole strategy. Proposals are projected onto the
//! bounds. Dimensions whose bounds collapse to a point are held fixed and
//! excluded from the simplex.

/// Options for a single Nelder-Mead run.
#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    /// Evaluation budget for this run.
    pub max_evals: u64,
    /// Converged when the simplex value spread falls below this.
    pub f_tol: f64,
    /// Converged when the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            max_evals: 400,
            f_tol: 1e-10,
            x_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: u64,
    pub converged: bool,
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo.iter()).zip(hi.iter()) {
        *v = v.clamp(l, h);
    }
}

/// Search state: counts evaluations against the budget and remembers the best
/// evaluated point, so a truncated run still reports a point it actually
/// scored. The evaluation sequence depends only on the start, which makes the
/// best value non-increasing in the budget.
struct Search<'a, F> {
    f: F,
    base: &'a [f64],
    active: &'a [usize],
    max_evals: u64,
    evals: u64,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<'a, F: FnMut(&[f64]) -> f64> Search<'a, F> {
    fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = self.base.to_vec();
        for (value, &i) in reduced.iter().zip(self.active.iter()) {
            out[i] = *value;
        }
        out
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    fn eval(&mut self, reduced: &[f64]) -> f64 {
        self.evals += 1;
        let point = self.expand(reduced);
        let value = (self.f)(&point);
        if value < self.best_f {
            self.best_f = value;
            self.best_x = reduced.to_vec();
        }
        value
    }
}

/// Minimizes `f` over the box `[lo, hi]` starting from `x0`.
///
/// Standard reflection/expansion/contraction/shrink coefficients
/// (1, 2, 0.5, 0.5); every candidate is clamped into the box before
/// evaluation. Returns the best evaluated point.
pub fn nelder_mead_bounded<F>(
    f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &NmOptions,
) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let active: Vec<usize> = (0..x0.len()).filter(|&i| hi[i] > lo[i]).collect();
    let n = active.len();
    let mut base = x0.to_vec();
    clamp_into(&mut base, lo, hi);

    let mut search = Search {
        f,
        base: &base,
        active: &active,
        max_evals: opts.max_evals.max(1),
        evals: 0,
        best_x: active.iter().map(|&i| base[i]).collect(),
        best_f: f64::INFINITY,
    };

    // Everything pinned: a single evaluation is the answer.
    if n == 0 {
        search.eval(&[]);
        let x = search.expand(&[]);
        return NmResult {
            x,
            value: search.best_f,
            evaluations: search.evals,
            converged: true,
        };
    }

    let reduced_lo: Vec<f64> = active.iter().map(|&i| lo[i]).collect();
    let reduced_hi: Vec<f64> = active.iter().map(|&i| hi[i]).collect();

    // Initial simplex: the start plus one vertex stepped 10% of the box
    // width along each active dimension (stepping inward at the upper edge).
    let x0r: Vec<f64> = active.iter().map(|&i| base[i]).collect();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0r.clone());
    for d in 0..n {
        let mut vertex = x0r.clone();
        let step = 0.1 * (reduced_hi[d] - reduced_lo[d]);
        vertex[d] = if vertex[d] + step <= reduced_hi[d] {
            vertex[d] + step
        } else {
            vertex[d] - step
        };
        simplex.push(vertex);
    }
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    for vertex in &simplex {
        if search.exhausted() {
            values.push(f64::INFINITY);
        } else {
            values.push(search.eval(vertex));
        }
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;

    while !search.exhausted() {
        // Order the simplex by value.
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        // Convergence: value spread and simplex diameter.
        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(simplex[0].iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol * (1.0 + values[0].abs()) && diameter <= opts.x_tol {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for vertex in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(vertex.iter()) {
                *c += x / n as f64;
            }
        }

        let worst = simplex[n].clone();
        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(worst.iter())
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        clamp_into(&mut reflected, &reduced_lo, &reduced_hi);
        let f_reflected = search.eval(&reflected);

        if f_reflected < values[0] {
            if search.exhausted() {
                break;
            }
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(worst.iter())
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            clamp_into(&mut expanded, &reduced_lo, &reduced_hi);
            let f_expanded = search.eval(&expanded);
            if f_expanded < f_reflected {
                simplex[n] = expanded;
                values[n] = f_expanded;
            } else {
                simplex[n] = reflected;
                values[n] = f_reflected;
            }
        } else if f_reflected < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_reflected;
        } else {
            if search.exhausted() {
                break;
            }
            let mut contracted: Vec<f64> = centroid
                .iter()
                .zip(worst.iter())
                .map(|(c, w)| c + rho * (w - c))
                .collect();
            clamp_into(&mut contracted, &reduced_lo, &reduced_hi);
            let f_contracted = search.eval(&contracted);
            if f_contracted < values[n] {
                simplex[n] = contracted;
                values[n] = f_contracted;
            } else {
                // Shrink everything toward the best vertex.
                for i in 1..=n {
                    if search.exhausted() {
                        break;
                    }
                    let best_vertex = simplex[0].clone();
                    for (x, b) in simplex[i].iter_mut().zip(best_vertex.iter()) {
                        *x = b + sigma * (*x - b);
                    }
                    values[i] = search.eval(&simplex[i].clone());
                }
            }
        }
    }

    let x = search.expand(&search.best_x.clone());
    NmResult {
        x,
        value: search.best_f,
        evaluations: search.evals,
        converged,
    }
}

/// Deterministic Latin-hypercube sample of the box: `count` points, one per
/// stratum per dimension, strata centers, independently permuted per
/// dimension.
pub fn latin_hypercube(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    use crate::util::Rng;
    let dim = lo.len();
    let mut rng = Rng::seeded(seed);
    let mut strata: Vec<Vec<usize>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        let mut order: Vec<usize> = (0..count).collect();
        rng.shuffle(&mut order);
        strata.push(order);
    }
    (0..count)
        .map(|p| {
            (0..dim)
                .map(|d| {
                    let u = (strata[d][p] as f64 + 0.5) / count as f64;
                    lo[d] + u * (hi[d] - lo[d])
                })
                .collect()
        })
        .collect()
}
