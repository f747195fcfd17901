//! Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher),
//! separable over axes, in cell units.

/// Lower envelope of parabolas rooted at the finite entries of `f`.
fn transform_line(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k: isize = -1;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k as usize] = q;
            z[k as usize] = s;
            z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        out.fill(f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let d = q as f64 - v[j] as f64;
        *o = d * d + f[v[j]];
    }
}

/// Squared distance (in cells) from every cell centre to the nearest site.
/// Infinite when there are no sites.
pub(crate) fn squared_distance(dims: &[usize], sites: &[bool]) -> Vec<f64> {
    let total: usize = dims.iter().product();
    debug_assert_eq!(total, sites.len());
    let mut grid: Vec<f64> = sites.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let n = dims.len();
    let mut strides = vec![1usize; n];
    for d in (0..n.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * dims[d + 1];
    }
    let longest = dims.iter().copied().max().unwrap_or(0);
    let mut line = vec![0.0; longest];
    let mut res = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];
    for axis in 0..n {
        let len = dims[axis];
        let stride = strides[axis];
        let block = stride * len;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (t, slot) in line[..len].iter_mut().enumerate() {
                    *slot = grid[base + t * stride];
                }
                transform_line(&line[..len], &mut res[..len], &mut v, &mut z);
                for (t, val) in res[..len].iter().enumerate() {
                    grid[base + t * stride] = *val;
                }
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(dims: &[usize], sites: &[bool]) -> Vec<f64> {
        let n = dims.len();
        let unravel = |mut i: usize| {
            let mut g = vec![0i64; n];
            for d in (0..n).rev() {
                g[d] = (i % dims[d]) as i64;
                i /= dims[d];
            }
            g
        };
        (0..sites.len())
            .map(|i| {
                let a = unravel(i);
                (0..sites.len())
                    .filter(|&j| sites[j])
                    .map(|j| {
                        let b = unravel(j);
                        a.iter().zip(&b).map(|(x, y)| ((x - y) * (x - y)) as f64).sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn no_sites_is_infinite() {
        assert!(squared_distance(&[3, 4], &[false; 12]).iter().all(|v| v.is_infinite()));
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            dims in prop::collection::vec(1usize..7, 1..4),
            seed in any::<u64>(),
        ) {
            let total: usize = dims.iter().product();
            let sites: Vec<bool> = (0..total).map(|i| (seed.rotate_left(i as u32 % 64) ^ i as u64) % 5 == 0).collect();
            prop_assert_eq!(squared_distance(&dims, &sites), brute(&dims, &sites));
        }
    }
}
