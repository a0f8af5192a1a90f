//! Perron eigendata of nonnegative irreducible matrices by power iteration.

use crate::error::{Error, Result};
use crate::graph;

pub(crate) struct Perron {
    pub rho: f64,
    /// Right eigenvector, positive, max-normalised.
    pub right: Vec<f64>,
    /// Left eigenvector, positive, max-normalised.
    pub left: Vec<f64>,
}

const TOL: f64 = 1e-13;
const MAX_ITERS: usize = 2_000_000;

fn support(m: &[Vec<f64>]) -> Vec<Vec<usize>> {
    m.iter().map(|row| row.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(j, _)| j).collect()).collect()
}

/// Dominant eigenpair of `m + shift * I`; the shift makes the iteration
/// converge for periodic matrices as well.
fn iterate(m: &[Vec<f64>], transpose: bool, shift: f64) -> (f64, Vec<f64>) {
    let n = m.len();
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERS {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let mut s = shift * v[i];
            for j in 0..n {
                let a = if transpose { m[j][i] } else { m[i][j] };
                s += a * v[j];
            }
            next[i] = s;
        }
        let scale = next.iter().cloned().fold(0.0, f64::max);
        next.iter_mut().for_each(|x| *x /= scale);
        // residual of the eigen-equation, relative to the eigenvalue
        let resid = (0..n)
            .map(|i| {
                let mut s = shift * next[i];
                for j in 0..n {
                    let a = if transpose { m[j][i] } else { m[i][j] };
                    s += a * next[j];
                }
                (s - scale * next[i]).abs()
            })
            .fold(0.0, f64::max);
        v = next;
        lambda = scale;
        if resid <= TOL * scale {
            break;
        }
    }
    (lambda - shift, v)
}

pub(crate) fn perron(m: &[Vec<f64>]) -> Result<Perron> {
    let sup = support(m);
    if graph::strongly_connected_components(&sup).len() != 1 {
        return Err(Error::NotIrreducible);
    }
    let shift = m.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (rho, right) = iterate(m, false, shift);
    let (_, left) = iterate(m, true, shift);
    Ok(Perron { rho, right, left })
}
