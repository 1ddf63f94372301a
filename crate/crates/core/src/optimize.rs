//! Derivative-free minimisers used by the frequentist bandwidth selectors.

/// Outcome of a single Nelder-Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead on an unconstrained objective. Infinite values are allowed and
/// simply lose every comparison. Converges when the simplex diameter falls
/// below `xtol` (max-norm).
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, xtol: f64, max_evals: usize) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for k in 0..n {
        let mut x = x0.to_vec();
        x[k] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut converged = false;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < xtol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = vertex.0.iter().zip(&best).map(|(v, b)| b + 0.5 * (v - b)).collect();
            let v = eval(&x, &mut evals);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult { x, value, evaluations: evals, converged }
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max, evaluations)`.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64, usize)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut evals = 2;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > xtol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        evals += 1;
    }
    if fc >= fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let r = nelder_mead(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2),
            &[0.0, 0.0],
            0.5,
            1e-8,
            2000,
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_respects_budget() {
        let r = nelder_mead(|x| x[0].sin() + x[1].powi(2), &[3.0, 1.0], 0.5, 1e-30, 40);
        assert!(r.evaluations <= 43);
        assert!(!r.converged);
    }

    #[test]
    fn nelder_mead_avoids_infinite_region() {
        let r = nelder_mead(
            |x| if x[0] < 0.0 { f64::INFINITY } else { (x[0] - 0.2).powi(2) },
            &[1.0],
            0.5,
            1e-9,
            500,
        );
        assert!((r.x[0] - 0.2).abs() < 1e-6);
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, v, _) = golden_section_max(|x| -(x - 0.3).powi(2) + 1.0, -2.0, 5.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
