use crate::error::{GsgiError, Result};

/// Equilibrium of a zero-sum matrix game where the row player maximizes.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSumSolution {
    pub defender: Vec<f64>,
    pub attacker: Vec<f64>,
    pub value: f64,
}

const PIVOT_EPS: f64 = 1e-12;

/// Maximin strategies and value of `g` (rows: defender, maximizing).
///
/// Solves `max Σy s.t. G'y ≤ 1, y ≥ 0` on the positively shifted matrix with
/// a dense tableau and Bland's rule; the row strategy comes from the duals.
/// The result is checked against both optimality inequalities.
pub fn solve_zero_sum(g: &[Vec<f64>]) -> Result<ZeroSumSolution> {
    let m = g.len();
    if m == 0 || g[0].is_empty() || g.iter().any(|r| r.len() != g[0].len()) {
        return Err(GsgiError::Shape(
            "payoff matrix must be non-empty and rectangular".into(),
        ));
    }
    let n = g[0].len();
    if g.iter().flatten().any(|v| !v.is_finite()) {
        return Err(GsgiError::NonFinite("payoff matrix".into()));
    }
    let min = g.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;

    // Tableau rows 0..m are constraints, row m is the objective; columns
    // 0..n are y, n..n+m slacks, last column the right-hand side.
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        for j in 0..n {
            t[i][j] = g[i][j] + shift;
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = 1.0;
    }
    t[m][..n].fill(-1.0);
    let mut basis: Vec<usize> = (n..n + m).collect();

    while let Some(enter) = (0..n + m).find(|&j| t[m][j] < -PIVOT_EPS) {
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > PIVOT_EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                let take = match leave {
                    None => true,
                    Some(l) => ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[l]),
                };
                if take {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Err(GsgiError::InvalidArgument("unbounded matrix-game program".into()));
        };
        let p = t[r][enter];
        t[r].iter_mut().for_each(|v| *v /= p);
        for i in 0..=m {
            if i != r && t[i][enter] != 0.0 {
                let f = t[i][enter];
                let (row, pivot) = if i < r {
                    let (a, b) = t.split_at_mut(r);
                    (&mut a[i], &b[0])
                } else {
                    let (a, b) = t.split_at_mut(i);
                    (&mut b[0], &a[r])
                };
                row.iter_mut().zip(pivot).for_each(|(v, p)| *v -= f * p);
            }
        }
        basis[r] = enter;
    }

    let total = t[m][width - 1];
    let v_shifted = 1.0 / total;
    let mut attacker = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            attacker[b] = t[i][width - 1] * v_shifted;
        }
    }
    let mut defender: Vec<f64> = (0..m).map(|i| (t[m][n + i] * v_shifted).max(0.0)).collect();
    normalize(&mut attacker);
    normalize(&mut defender);
    let value = v_shifted - shift;
    let sol = ZeroSumSolution {
        defender,
        attacker,
        value,
    };
    verify(g, &sol)?;
    Ok(sol)
}

fn normalize(p: &mut [f64]) {
    p.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
}

/// Worst-case payoffs of a solution: `(min_j σdᵀG_j, max_i G_i σa)`.
pub fn certificate(g: &[Vec<f64>], sol: &ZeroSumSolution) -> (f64, f64) {
    let n = g[0].len();
    let col_min = (0..n)
        .map(|j| g.iter().zip(&sol.defender).map(|(r, x)| r[j] * x).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let row_max = g
        .iter()
        .map(|r| r.iter().zip(&sol.attacker).map(|(v, y)| v * y).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    (col_min, row_max)
}

fn verify(g: &[Vec<f64>], sol: &ZeroSumSolution) -> Result<()> {
    let (lo, hi) = certificate(g, sol);
    let scale = g.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-7 * scale;
    if lo < sol.value - tol || hi > sol.value + tol {
        return Err(GsgiError::InvalidArgument(format!(
            "equilibrium check failed: {lo} <= {} <= {hi} violated",
            sol.value
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pennies() {
        let s = solve_zero_sum(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert!((s.value).abs() < 1e-12);
        for p in s.defender.iter().chain(&s.attacker) {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn oddments_example() {
        let s = solve_zero_sum(&[vec![3.0, -1.0], vec![-2.0, 2.0]]).unwrap();
        assert!((s.value - 0.5).abs() < 1e-9);
        assert!((s.attacker[0] - 0.375).abs() < 1e-9);
        assert!((s.attacker[1] - 0.625).abs() < 1e-9);
        assert!((s.defender[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn dominated_row_gets_no_weight() {
        let s = solve_zero_sum(&[vec![0.0, 1.0, -2.0], vec![1.0, 2.0, -1.0]]).unwrap();
        assert_eq!(s.defender[0], 0.0);
        assert!((s.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_constant_matrices() {
        let s = solve_zero_sum(&[vec![2.0, 2.0], vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        let s = solve_zero_sum(&[vec![5.0]]).unwrap();
        assert_eq!(
            (s.defender.clone(), s.attacker.clone(), s.value),
            (vec![1.0], vec![1.0], 5.0)
        );
        assert!(solve_zero_sum(&[vec![f64::NAN]]).is_err());
        assert!(solve_zero_sum(&[]).is_err());
    }
}
