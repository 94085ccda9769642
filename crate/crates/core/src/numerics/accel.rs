/// Wynn's epsilon algorithm applied to the partial sums of a series.
/// Returns the accelerated limit and the difference between the last two
/// even-column estimates as an error proxy.
pub fn wynn_epsilon(partial_sums: &[f64]) -> (f64, f64) {
    let n = partial_sums.len();
    if n < 3 {
        let last = partial_sums.last().copied().unwrap_or(0.0);
        return (last, f64::INFINITY);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial_sums.to_vec();
    let mut best = *partial_sums.last().unwrap();
    let mut best_prev = partial_sums[n - 2];
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            let v = if diff == 0.0 { f64::INFINITY } else { prev[i + 1] + 1.0 / diff };
            next.push(v);
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 {
            let l = cur.len();
            if cur[l - 1].is_finite() {
                best_prev = if l >= 2 { cur[l - 2] } else { best };
                best = cur[l - 1];
            } else {
                break;
            }
        }
    }
    (best, (best - best_prev).abs())
}
