//! Pairwise Frank-Wolfe over a product of two weight simplices.
//!
//! The objective is a convex function of the mixed distributions
//! `p = Σ a_i v_i` and `q = Σ b_j w_j`. Each iteration computes the
//! blockwise Frank-Wolfe gaps, picks the block with the larger gap and takes
//! a pairwise step (weight moves from the worst active vertex to the best
//! vertex) with an exact line search on the directional derivative.
//! Partial derivatives may be `±∞` on the boundary of the domain; the line
//! search never steps into a region where the objective is infinite.

/// A convex objective in `(p, q)`.
pub(crate) trait Objective {
    fn value(&self, p: &[f64], q: &[f64]) -> f64;
    /// Partial derivatives with respect to the coordinates of `p` and `q`.
    fn partials(&self, p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>);
    /// Extra stopping condition checked once the gaps are below tolerance.
    fn accept(&self, _p: &[f64], _q: &[f64], _gaps: Gaps, _tol: f64) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Gaps {
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub value: f64,
    pub gaps: Gaps,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) const MAX_ITERATIONS: usize = 100_000;

/// `Σ v_x g_x` skipping zero entries of `v`; conflicting infinities map to `+∞`.
pub(crate) fn dot_ext(v: &[f64], g: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&vx, &gx) in v.iter().zip(g) {
        if vx != 0.0 {
            s += vx * gx;
        }
    }
    if s.is_nan() {
        f64::INFINITY
    } else {
        s
    }
}

fn mix(verts: &[&[f64]], w: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (wi, v) in w.iter().zip(verts) {
        if *wi != 0.0 {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += wi * x;
            }
        }
    }
    out
}

struct BlockView {
    scores: Vec<f64>,
    gap: f64,
    toward: usize,
    away: usize,
}

fn block_view(verts: &[&[f64]], w: &[f64], grad: &[f64]) -> BlockView {
    let scores: Vec<f64> = verts.iter().map(|v| dot_ext(v, grad)).collect();
    let mut toward = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[toward] {
            toward = i;
        }
    }
    let mut away = usize::MAX;
    let mut current = 0.0;
    for (i, (&wi, &s)) in w.iter().zip(&scores).enumerate() {
        if wi > 0.0 {
            current += wi * s;
            if away == usize::MAX || s > scores[away] {
                away = i;
            }
        }
    }
    let gap = (current - scores[toward]).max(0.0);
    BlockView {
        scores,
        gap: if gap.is_nan() { f64::INFINITY } else { gap },
        toward,
        away,
    }
}

/// Minimizes a convex function `φ` on `[0, γmax]` given its derivative.
fn line_search(dphi: impl Fn(f64) -> f64, gmax: f64) -> f64 {
    let sanitize = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let d0 = sanitize(dphi(0.0));
    if d0 >= 0.0 {
        return 0.0;
    }
    let d1 = sanitize(dphi(gmax));
    if d1 <= 0.0 {
        return gmax;
    }
    let (mut lo, mut hi, mut flo, mut fhi) = (0.0_f64, gmax, d0, d1);
    let mut side = 0i8;
    for _ in 0..200 {
        let secant = if flo.is_finite() && fhi.is_finite() {
            lo - flo * (hi - lo) / (fhi - flo)
        } else {
            f64::NAN
        };
        let x = if secant > lo && secant < hi {
            secant
        } else {
            0.5 * (lo + hi)
        };
        if x <= lo || x >= hi {
            break;
        }
        let fx = sanitize(dphi(x));
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= 1e-15 * gmax {
            break;
        }
    }
    lo
}

/// Runs pairwise Frank-Wolfe from weights `a0`, `b0`.
pub(crate) fn minimize<O: Objective>(
    objective: &O,
    p_verts: &[&[f64]],
    q_verts: &[&[f64]],
    a0: Vec<f64>,
    b0: Vec<f64>,
    tol: f64,
    max_iterations: usize,
) -> Outcome {
    let dim = p_verts[0].len();
    let mut a = a0;
    let mut b = b0;
    let mut stalled = 0usize;
    let mut iterations = 0;
    loop {
        let p = mix(p_verts, &a, dim);
        let q = mix(q_verts, &b, dim);
        let (gp, gq) = objective.partials(&p, &q);
        let vp = block_view(p_verts, &a, &gp);
        let vq = block_view(q_verts, &b, &gq);
        let gaps = Gaps { p: vp.gap, q: vq.gap };
        let done = gaps.p + gaps.q <= tol && objective.accept(&p, &q, gaps, tol);
        if done || iterations >= max_iterations || stalled >= 4 {
            let value = objective.value(&p, &q);
            return Outcome {
                a,
                b,
                p,
                q,
                value,
                gaps,
                iterations,
                converged: done,
            };
        }
        iterations += 1;

        // Prefer the block with the larger gap; fall back to the other one
        // if the preferred step makes no progress.
        let order = if vp.gap >= vq.gap { [0, 1] } else { [1, 0] };
        let mut moved = false;
        for block in order {
            let (verts, w, view) = if block == 0 {
                (p_verts, &mut a, &vp)
            } else {
                (q_verts, &mut b, &vq)
            };
            if view.away == view.toward || view.scores[view.away] <= view.scores[view.toward] {
                continue;
            }
            let dir: Vec<f64> = verts[view.toward]
                .iter()
                .zip(verts[view.away].iter())
                .map(|(s, v)| s - v)
                .collect();
            let gmax = w[view.away];
            let step = if block == 0 {
                line_search(
                    |g| {
                        let pg: Vec<f64> = p
                            .iter()
                            .zip(&dir)
                            .map(|(x, d)| (x + g * d).max(0.0))
                            .collect();
                        dot_ext(&dir, &objective.partials(&pg, &q).0)
                    },
                    gmax,
                )
            } else {
                line_search(
                    |g| {
                        let qg: Vec<f64> = q
                            .iter()
                            .zip(&dir)
                            .map(|(x, d)| (x + g * d).max(0.0))
                            .collect();
                        dot_ext(&dir, &objective.partials(&p, &qg).1)
                    },
                    gmax,
                )
            };
            if step > 0.0 {
                if step >= gmax {
                    w[view.toward] += w[view.away];
                    w[view.away] = 0.0;
                } else {
                    w[view.toward] += step;
                    w[view.away] -= step;
                }
                moved = true;
                break;
            }
        }
        if moved {
            stalled = 0;
        } else {
            stalled += 1;
        }
    }
}
