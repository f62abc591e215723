//! Plain Lloyd iterations from given seeds, written without the library's
//! helpers.

pub struct Fit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
}

fn d2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s
}

fn closest(p: &[f64], cs: &[Vec<f64>]) -> usize {
    let mut best = 0;
    for j in 1..cs.len() {
        if d2(p, &cs[j]) < d2(p, &cs[best]) {
            best = j;
        }
    }
    best
}

/// Runs until assignments repeat or `max_iter` updates. An empty cluster
/// takes the unclaimed point farthest from its own centroid.
pub fn lloyd(points: &[Vec<f64>], seeds: Vec<Vec<f64>>, max_iter: usize) -> Fit {
    let k = seeds.len();
    let dim = points[0].len();
    let mut cs = seeds;
    let mut asg: Vec<usize> = points.iter().map(|p| closest(p, &cs)).collect();
    for _ in 0..max_iter {
        let mut next = Vec::new();
        let mut claimed: Vec<usize> = Vec::new();
        for j in 0..k {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&asg)
                .filter(|(_, &a)| a == j)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                let mut far = usize::MAX;
                let mut far_d = -1.0;
                for (i, p) in points.iter().enumerate() {
                    let d = d2(p, &cs[asg[i]]);
                    if !claimed.contains(&i) && d > far_d {
                        far = i;
                        far_d = d;
                    }
                }
                claimed.push(far);
                next.push(points[far].clone());
            } else {
                let mut c = vec![0.0; dim];
                for m in &members {
                    for i in 0..dim {
                        c[i] += m[i];
                    }
                }
                next.push(c.iter().map(|x| x / members.len() as f64).collect());
            }
        }
        cs = next;
        let new: Vec<usize> = points.iter().map(|p| closest(p, &cs)).collect();
        let done = new == asg;
        asg = new;
        if done {
            break;
        }
    }
    let inertia = points.iter().zip(&asg).map(|(p, &a)| d2(p, &cs[a])).sum();
    Fit {
        centroids: cs,
        assignments: asg,
        inertia,
    }
}
