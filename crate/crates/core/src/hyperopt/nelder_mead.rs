use alloc::vec;
use alloc::vec::Vec;

use super::{Budget, Clock, SearchOutcome, SearchSpace, Stage, Tracker};
use crate::error::{invalid, Error, Result};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NmConfig {
    /// Edge length of the initial simplex.
    pub a: f64,
    /// Convergence threshold on the spread of vertex values.
    pub eps: f64,
    pub max_iter: usize,
    pub max_evals: usize,
}

impl Default for NmConfig {
    fn default() -> Self {
        NmConfig {
            a: 1.0,
            eps: 1e-10,
            max_iter: 1000,
            max_evals: usize::MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// The spread criterion fired (rather than an iteration or evaluation cap).
    pub converged: bool,
    pub spread: f64,
}

/// Offsets `(p, q)` of the regular initial simplex with edge `a` in `n` dimensions.
pub fn simplex_offsets(n: usize, a: f64) -> (f64, f64) {
    let nf = n as f64;
    let root = math::sqrt(nf + 1.0);
    let c = a / (nf * core::f64::consts::SQRT_2);
    (c * (root + nf - 1.0), c * (root - 1.0))
}

/// `sqrt(sum (f_i - mean)^2 / n)` over the `n + 1` vertex values.
pub fn vertex_spread(f: &[f64]) -> f64 {
    let n = f.len() - 1;
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    math::sqrt(f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64)
}

struct Evaluator<'f, 's> {
    f: &'f mut dyn FnMut(&[f64]) -> Result<f64>,
    stop: &'s mut dyn FnMut() -> bool,
    count: usize,
    limit: usize,
}

impl Evaluator<'_, '_> {
    /// `Ok(None)` once the evaluation allowance is spent.
    fn call(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.count >= self.limit || (self.stop)() {
            return Ok(None);
        }
        self.count += 1;
        let v = (self.f)(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective { vertex: x.to_vec() });
        }
        Ok(Some(v))
    }
}

fn lerp(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

fn sort_simplex(verts: &mut Vec<Vec<f64>>, fv: &mut Vec<f64>) {
    let mut order: Vec<usize> = (0..fv.len()).collect();
    order.sort_by(|&i, &j| fv[i].total_cmp(&fv[j]));
    *verts = order.iter().map(|&i| verts[i].clone()).collect();
    *fv = order.iter().map(|&i| fv[i]).collect();
}

fn run(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    cfg: &NmConfig,
    stop: &mut dyn FnMut() -> bool,
) -> Result<NmOutcome> {
    let n = x0.len();
    if n == 0 {
        return Err(invalid("x0", "dimension must be at least 1"));
    }
    if !(cfg.a > 0.0) || !(cfg.eps > 0.0) {
        return Err(invalid(
            "nelder-mead",
            "edge length and eps must be positive",
        ));
    }
    let mut ev = Evaluator {
        f,
        stop,
        count: 0,
        limit: cfg.max_evals,
    };
    let (p, q) = simplex_offsets(n, cfg.a);
    let mut verts = vec![x0.to_vec()];
    for i in 0..n {
        verts.push((0..n).map(|k| x0[k] + if k == i { p } else { q }).collect());
    }
    let mut fv = Vec::with_capacity(n + 1);
    for v in &verts {
        match ev.call(v)? {
            Some(y) => fv.push(y),
            None => {
                return Err(invalid(
                    "budget",
                    "too small to evaluate the initial simplex",
                ))
            }
        }
    }

    let mut iterations = 0;
    let mut converged = false;
    'outer: loop {
        sort_simplex(&mut verts, &mut fv);
        if vertex_spread(&fv) < cfg.eps {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let mut c = vec![0.0; n];
        for v in &verts[..n] {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi / n as f64;
            }
        }
        let (fb, fs, fw) = (fv[0], fv[n - 1], fv[n]);
        let xw = verts[n].clone();
        let xr = lerp(&c, &xw, -1.0);
        let Some(fr) = ev.call(&xr)? else { break };

        if fr < fb {
            let xe = lerp(&c, &xw, -2.0);
            let Some(fe) = ev.call(&xe)? else { break };
            (verts[n], fv[n]) = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < fs {
            (verts[n], fv[n]) = (xr, fr);
            continue;
        }
        let (xc, accept_below) = if fr < fw {
            (lerp(&c, &xr, 0.5), fr)
        } else {
            (lerp(&c, &xw, 0.5), fw)
        };
        let Some(fc) = ev.call(&xc)? else { break };
        if fc < accept_below || (fr < fw && fc <= fr) {
            (verts[n], fv[n]) = (xc, fc);
            continue;
        }
        let best = verts[0].clone();
        for i in 1..=n {
            verts[i] = lerp(&best, &verts[i], 0.5);
            match ev.call(&verts[i])? {
                Some(y) => fv[i] = y,
                None => {
                    fv.truncate(i);
                    verts.truncate(i);
                    break 'outer;
                }
            }
        }
    }
    sort_simplex(&mut verts, &mut fv);
    let spread = if fv.len() == n + 1 {
        vertex_spread(&fv)
    } else {
        f64::NAN
    };
    Ok(NmOutcome {
        x: verts[0].clone(),
        f: fv[0],
        iterations,
        evaluations: ev.count,
        converged,
        spread,
    })
}

/// Minimises `f` from `x0` with reflection 1, expansion 2, contraction 0.5
/// and shrink 0.5, until the vertex-value spread drops below `eps` or a cap
/// is hit. A non-finite value aborts with the offending vertex.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    cfg: &NmConfig,
) -> Result<NmOutcome> {
    run(f, x0, cfg, &mut || false)
}

/// Maximises `objective` over `space` with Nelder–Mead in unit-scaled internal
/// coordinates. Candidates are projected onto the domains before evaluation;
/// a non-finite score is replaced by a large penalty so one failed training
/// run does not abort the search.
pub fn nelder_mead_search(
    space: &SearchSpace,
    x0: &[f64],
    objective: &mut dyn FnMut(&[f64]) -> Result<f64>,
    budget: Budget,
    cfg: &NmConfig,
    clock: &dyn Clock,
) -> Result<SearchOutcome> {
    space.check_point(x0)?;
    let to_point = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(&space.params)
            .map(|(&ui, p)| {
                let (a, b) = p.domain.internal_bounds();
                p.domain.from_internal(a + ui.clamp(0.0, 1.0) * (b - a))
            })
            .collect()
    };
    let u0: Vec<f64> = x0
        .iter()
        .zip(&space.params)
        .map(|(&v, p)| p.domain.normalise(p.domain.project(v)))
        .collect();
    let tracker = core::cell::RefCell::new(Tracker::new(objective, budget, clock));
    let mut iteration = 0;
    let mut f = |u: &[f64]| -> Result<f64> {
        let x = to_point(u);
        let s = tracker
            .borrow_mut()
            .eval(Stage::NelderMead, iteration, &x, &[])?;
        iteration += 1;
        Ok(if s.is_finite() { -s } else { 1e300 })
    };
    let nm_cfg = NmConfig {
        max_evals: budget.max_evaluations,
        ..*cfg
    };
    let result = run(&mut f, &u0, &nm_cfg, &mut || {
        tracker.borrow_mut().exhausted()
    });
    match result {
        Ok(_) => {}
        // Running out of budget inside the initial simplex still yields the best seen.
        Err(Error::InvalidParameter { name: "budget", .. }) => {}
        Err(e) => return Err(e),
    }
    let mut t = tracker.into_inner();
    if t.remaining() == 0 {
        t.truncated = true;
    }
    Ok(t.finish((space.project(x0), f64::NEG_INFINITY)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperopt::{NoClock, SeparableQuadratic};

    fn sphere(x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }

    /// Straight-line reference: same moves, no early exits, fixed iteration count.
    fn reference_min(x0: [f64; 2], iters: usize) -> f64 {
        let (p, q) = simplex_offsets(2, 1.0);
        let mut s = [x0, [x0[0] + p, x0[1] + q], [x0[0] + q, x0[1] + p]];
        let f = |x: [f64; 2]| x[0] * x[0] + x[1] * x[1];
        for _ in 0..iters {
            s.sort_by(|a, b| f(*a).total_cmp(&f(*b)));
            let c = [(s[0][0] + s[1][0]) / 2.0, (s[0][1] + s[1][1]) / 2.0];
            let at = |t: f64| [c[0] + t * (s[2][0] - c[0]), c[1] + t * (s[2][1] - c[1])];
            let (xr, xe) = (at(-1.0), at(-2.0));
            if f(xr) < f(s[0]) {
                s[2] = if f(xe) < f(xr) { xe } else { xr };
            } else if f(xr) < f(s[1]) {
                s[2] = xr;
            } else {
                let xc = if f(xr) < f(s[2]) { at(-0.5) } else { at(0.5) };
                if f(xc) < f(xr).min(f(s[2])) {
                    s[2] = xc;
                } else {
                    for i in 1..3 {
                        s[i] = [
                            s[0][0] + 0.5 * (s[i][0] - s[0][0]),
                            s[0][1] + 0.5 * (s[i][1] - s[0][1]),
                        ];
                    }
                }
            }
        }
        s.iter().map(|v| f(*v)).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn simplex_constants() {
        let (p, q) = simplex_offsets(2, 1.0);
        assert!((p - 0.9659).abs() < 1e-4);
        assert!((q - 0.2588).abs() < 1e-4);
        assert!((p - (3f64.sqrt() + 1.0) / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        // Edges of the initial simplex all have length a.
        let d = |a: [f64; 2], b: [f64; 2]| math::hypot(a[0] - b[0], a[1] - b[1]);
        assert!((d([0.0, 0.0], [p, q]) - 1.0).abs() < 1e-12);
        assert!((d([p, q], [q, p]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_converges_before_cap() {
        let out = nelder_mead(&mut sphere, &[1.0, 1.0], &NmConfig::default()).unwrap();
        assert!(out.f < 1e-8, "{}", out.f);
        assert!(out.converged);
        assert!(out.iterations < NmConfig::default().max_iter);
        assert!(out.spread >= 0.0 && out.spread < 1e-10);
        assert!(reference_min([1.0, 1.0], out.iterations) < 1e-6);
    }

    #[test]
    fn one_dimension() {
        let out = nelder_mead(
            &mut |x| Ok((x[0] - 2.0) * (x[0] - 2.0)),
            &[0.0],
            &NmConfig::default(),
        )
        .unwrap();
        assert!((out.x[0] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn non_finite_vertex_reported() {
        let err = nelder_mead(
            &mut |x| Ok(if x[0] > 0.5 { f64::NAN } else { 0.0 }),
            &[0.0, 0.0],
            &NmConfig::default(),
        )
        .unwrap_err();
        match err {
            Error::NonFiniteObjective { vertex } => assert!(vertex[0] > 0.5),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn spread_is_nonnegative() {
        assert_eq!(vertex_spread(&[1.0, 1.0, 1.0]), 0.0);
        assert!((vertex_spread(&[0.0, 2.0]) - math::sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn search_respects_budget_and_domain() {
        let space = SearchSpace::hyperparams();
        let q = SeparableQuadratic::reference(&space);
        let x0 = space.project(&[0.0; 12]);
        let out = nelder_mead_search(
            &space,
            &x0,
            &mut |x| Ok(q.score(x)),
            Budget::evaluations(60),
            &NmConfig {
                a: 0.3,
                ..NmConfig::default()
            },
            &NoClock,
        )
        .unwrap();
        assert!(out.trace.len() <= 60);
        assert!(out.trace.iter().all(|r| space.contains(&r.params)));
        assert!(out.best_score > q.score(&x0));
    }
}
