//! Tolerant hashing of real tuples on a fixed grid.

/// Fraction of a cell within which a coordinate is treated as sitting on a
/// cell boundary and the neighbouring cell is probed too.
const EDGE: f64 = 1e-3;

pub type Key<const N: usize> = [i64; N];

pub fn cell_key<const N: usize>(x: &[f64; N], grid: f64) -> Key<N> {
    let mut k = [0i64; N];
    for i in 0..N {
        k[i] = (x[i] / grid).round() as i64;
    }
    k
}

/// Primary key followed by every neighbouring key reachable by moving the
/// coordinates that lie close to a rounding boundary.
pub fn probe_keys<const N: usize>(x: &[f64; N], grid: f64) -> Vec<Key<N>> {
    let base = cell_key(x, grid);
    let mut keys = vec![base];
    for i in 0..N {
        let s = x[i] / grid;
        let frac = s - base[i] as f64;
        if frac.abs() > 0.5 - EDGE {
            let alt = base[i] + if frac > 0.0 { 1 } else { -1 };
            let n = keys.len();
            for j in 0..n {
                let mut k = keys[j];
                k[i] = alt;
                keys.push(k);
            }
        }
    }
    keys
}

pub fn hash_key<const N: usize>(k: &Key<N>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &v in k {
        h = (h.rotate_left(5) ^ v as u64).wrapping_mul(0x517c_c1b7_2722_0a95);
    }
    h ^ (h >> 29)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearby_values_share_a_probe() {
        let grid = 1e-6;
        for &x in &[0.0, 1.2345675e-6 * 0.5, 3.0000005e-6, -7.5e-6, 12.3456785] {
            let a = [x, 1.0];
            let b = [x + 3e-11, 1.0];
            let ka = cell_key(&b, grid);
            assert!(probe_keys(&a, grid).contains(&ka), "{x}");
            let kb = cell_key(&a, grid);
            assert!(probe_keys(&b, grid).contains(&kb), "{x}");
        }
        assert_eq!(probe_keys(&[0.25e-6, 0.1e-6], grid).len(), 1);
    }
}
