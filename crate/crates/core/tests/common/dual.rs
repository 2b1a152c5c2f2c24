use ffsonar::classify::svm::rbf;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Enumerates every split of the dual variables into lower bound, upper
/// bound and free, solves the equality-constrained stationarity system for
/// the free ones and keeps the split satisfying all KKT conditions.
/// Returns training decision values.
pub fn brute_force_dual(xs: &[Vec<f64>], ys: &[usize], c: f64, gamma: f64) -> Vec<f64> {
    let n = xs.len();
    let y: Vec<f64> = ys.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let k: Vec<Vec<f64>> = xs.iter().map(|a| xs.iter().map(|b| rbf(a, b, gamma)).collect()).collect();
    let mut found: Option<Vec<f64>> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        if free.is_empty() {
            continue;
        }
        let upper: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let m = free.len();
        let mut a = vec![vec![0.0; m + 1]; m + 1];
        let mut b = vec![0.0; m + 1];
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                a[r][s] = y[i] * y[j] * k[i][j];
            }
            a[r][m] = y[i];
            b[r] = 1.0 - upper.iter().map(|&j| y[i] * y[j] * k[i][j] * c).sum::<f64>();
            a[m][r] = y[i];
        }
        b[m] = -upper.iter().map(|&j| y[j] * c).sum::<f64>();
        let Some(sol) = solve(a, b) else { continue };
        let mut alpha = vec![0.0; n];
        for (r, &i) in free.iter().enumerate() {
            alpha[i] = sol[r];
        }
        for &j in &upper {
            alpha[j] = c;
        }
        let tol = 1e-9;
        if free.iter().any(|&i| !(alpha[i] > tol && alpha[i] < c - tol)) {
            continue;
        }
        let bias = sol[m];
        let f: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| alpha[j] * y[j] * k[i][j]).sum::<f64>() + bias)
            .collect();
        let kkt = (0..n).all(|i| match state[i] {
            0 => y[i] * f[i] >= 1.0 - tol,
            2 => y[i] * f[i] <= 1.0 + tol,
            _ => true,
        });
        if kkt {
            found = Some(f);
            break;
        }
    }
    found.expect("no KKT point with free support vectors")
}
