//! Numeric and plumbing helpers shared across the crate.

use ndarray::{Array1, Array2};

/// log(sum(exp(xs))) with max subtraction, stable for entries up to ~1e308.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Signum with sign(0) = 0, unlike `f64::signum` which maps +0.0 to 1.0.
pub fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting, then one
/// step of iterative refinement. Panics on a numerically singular matrix;
/// every call site passes `I - gamma * P` style matrices which are strictly
/// diagonally dominant for gamma < 1.
pub fn solve_linear(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let x = ge_solve(a, b);
    // One refinement pass keeps Bellman-flow residuals comfortably below 1e-9
    // even for gamma close to 1.
    let r = b - &a.dot(&x);
    let dx = ge_solve(a, &r);
    x + dx
}

fn ge_solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = b.len();
    assert_eq!(a.nrows(), n);
    assert_eq!(a.ncols(), n);
    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[[col, col]].abs();
        for row in col + 1..n {
            let v = m[[row, col]].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        assert!(best > 0.0, "singular linear system");
        if piv != col {
            for k in col..n {
                let tmp = m[[col, k]];
                m[[col, k]] = m[[piv, k]];
                m[[piv, k]] = tmp;
            }
            rhs.swap(col, piv);
        }
        let d = m[[col, col]];
        for row in col + 1..n {
            let factor = m[[row, col]] / d;
            if factor == 0.0 {
                continue;
            }
            m[[row, col]] = 0.0;
            for k in col + 1..n {
                m[[row, k]] -= factor * m[[col, k]];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[[row, k]] * x[k];
        }
        x[row] = acc / m[[row, row]];
    }
    x
}

/// splitmix64 step, used to derive independent substream seeds.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministically mixes a base seed with substream labels.
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = base ^ 0x6c62272e07bb0142;
    let mut out = splitmix64(&mut state);
    for &p in parts {
        state ^= p;
        out ^= splitmix64(&mut state);
    }
    out
}

/// Formats a float with `digits` significant digits, in positional notation
/// for moderate exponents and scientific otherwise (like C's %g).
pub fn fmt_sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-4..10).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.*e}", digits - 1, x)
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    if let Some(epos) = s.find('e') {
        let (mant, exp) = s.split_at(epos);
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}{exp}")
    } else if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// All-pairs hop distances over an undirected adjacency list by BFS.
/// Disconnected pairs get distance `n` (one more than any possible path).
pub fn hop_distances(adjacency: &[Vec<usize>]) -> Array2<f64> {
    let n = adjacency.len();
    let mut dist = Array2::from_elem((n, n), n as f64);
    let mut queue = std::collections::VecDeque::new();
    for src in 0..n {
        queue.clear();
        dist[[src, src]] = 0.0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[[src, u]];
            for &v in &adjacency[u] {
                if dist[[src, v]] > du + 1.0 {
                    dist[[src, v]] = du + 1.0;
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn logsumexp_matches_naive_on_small_values() {
        let xs: [f64; 3] = [0.3, -1.2, 2.0];
        let naive: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((logsumexp(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_survives_huge_inputs() {
        let xs = [1e6, 1e6 - 3.0];
        let v = logsumexp(&xs);
        assert!((v - (1e6 + (1.0 + (-3.0f64).exp()).ln())).abs() < 1e-6);
    }

    #[test]
    fn sign0_is_zero_at_zero() {
        assert_eq!(sign0(0.0), 0.0);
        assert_eq!(sign0(-0.0), 0.0);
        assert_eq!(sign0(3.0), 1.0);
        assert_eq!(sign0(-0.5), -1.0);
    }

    #[test]
    fn solve_linear_recovers_known_solution() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let x_true = array![0.7, -0.4];
        let b = a.dot(&x_true);
        let x = solve_linear(&a, &b);
        assert!((&x - &x_true).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn fmt_sig_styles() {
        assert_eq!(fmt_sig(0.0, 10), "0");
        assert_eq!(fmt_sig(1.5, 10), "1.5");
        assert_eq!(fmt_sig(-0.125, 3), "-0.125");
        assert_eq!(fmt_sig(1234567890.123, 10), "1234567890");
        assert_eq!(fmt_sig(1e-7, 4), "1e-7");
    }

    #[test]
    fn hop_distances_on_a_path_graph() {
        let adj = vec![vec![1], vec![0, 2], vec![1]];
        let d = hop_distances(&adj);
        assert_eq!(d[[0, 2]], 2.0);
        assert_eq!(d[[2, 0]], 2.0);
        assert_eq!(d[[1, 1]], 0.0);
    }

    #[test]
    fn hop_distances_disconnected_pair_capped_at_n() {
        let adj = vec![vec![1], vec![0], vec![]];
        let d = hop_distances(&adj);
        assert_eq!(d[[0, 2]], 3.0);
    }

    #[test]
    fn mix_seed_depends_on_every_part() {
        let a = mix_seed(7, &[1, 2]);
        let b = mix_seed(7, &[1, 3]);
        let c = mix_seed(8, &[1, 2]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, mix_seed(7, &[1, 2]));
    }
}
