use std::cmp::Ordering;

/// `a` dominates `b` under minimization: no worse in both objectives and
/// strictly better in at least one.
#[inline]
pub(crate) fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Partitions `points` into non-domination levels. Front `k` holds the
/// indices dominated only by members of earlier fronts; indices inside a
/// front are ascending.
pub fn fast_nondominated_sort(points: &[[f64; 2]]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

fn cmp_points(a: &[f64; 2], b: &[f64; 2]) -> Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
}

/// Crowding distance of each point of a front.
///
/// Per objective the points are sorted, the two extremes get `+inf` and
/// interior points accumulate the normalized gap between their neighbours.
/// An objective whose values are all equal contributes nothing. Copies of
/// an objective vector share a single slot: the first occurrence gets the
/// distance, later copies get 0.
pub fn crowding_distance(points: &[[f64; 2]]) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_points(&points[a], &points[b]).then(a.cmp(&b)));
    let mut reps = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        if k == 0 || points[order[k - 1]] != points[i] {
            reps.push(i);
        }
    }

    if reps.len() <= 2 {
        for &i in &reps {
            dist[i] = f64::INFINITY;
        }
        return dist;
    }

    for m in 0..2 {
        let mut sorted = reps.clone();
        sorted.sort_by(|&a, &b| {
            points[a][m]
                .total_cmp(&points[b][m])
                .then(points[a][1 - m].total_cmp(&points[b][1 - m]))
        });
        let lo = points[sorted[0]][m];
        let hi = points[sorted[sorted.len() - 1]][m];
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        dist[sorted[0]] = f64::INFINITY;
        dist[sorted[sorted.len() - 1]] = f64::INFINITY;
        for k in 1..sorted.len() - 1 {
            let gap = points[sorted[k + 1]][m] - points[sorted[k - 1]][m];
            dist[sorted[k]] += gap / span;
        }
    }
    dist
}
