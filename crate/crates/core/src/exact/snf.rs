//! Smith normal form of small integer matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::ivec::IVec3;

/// Elementary divisors of an integer matrix given as rows, nonzero ones
/// first in divisibility order, followed by zeros up to `min(rows, cols)`.
pub fn elementary_divisors(rows: &[Vec<BigInt>]) -> Vec<BigInt> {
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let r = m.min(n);
    let mut out = Vec::with_capacity(r);
    for t in 0..r {
        // Pivot: smallest nonzero magnitude in the trailing block.
        let piv = (t..m)
            .flat_map(|i| (t..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !a[i][j].is_zero())
            .min_by(|&(i, j), &(k, l)| a[i][j].abs().cmp(&a[k][l].abs()));
        let Some((pi, pj)) = piv else {
            out.extend(std::iter::repeat(BigInt::zero()).take(r - t));
            break;
        };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut changed = false;
            for i in t + 1..m {
                let q = a[i][t].div_floor(&a[t][t]);
                if !q.is_zero() {
                    for j in t..n {
                        let v = &q * &a[t][j];
                        a[i][j] -= v;
                    }
                }
                if !a[i][t].is_zero() {
                    a.swap(t, i);
                    changed = true;
                }
            }
            for j in t + 1..n {
                let q = a[t][j].div_floor(&a[t][t]);
                if !q.is_zero() {
                    for row in a.iter_mut().skip(t) {
                        let v = &q * &row[t];
                        row[j] -= v;
                    }
                }
                if !a[t][j].is_zero() {
                    for row in a.iter_mut() {
                        row.swap(t, j);
                    }
                    changed = true;
                }
            }
            if changed {
                continue;
            }
            // Divisibility: fold any entry the pivot does not divide into row t.
            let bad = (t + 1..m)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !a[i][j].is_multiple_of(&a[t][t]));
            match bad {
                Some((i, _)) => {
                    for j in t..n {
                        let v = a[i][j].clone();
                        a[t][j] += v;
                    }
                }
                None => break,
            }
        }
        out.push(a[t][t].abs());
    }
    out
}

fn gcd_all<'a>(it: impl Iterator<Item = &'a BigInt>) -> BigInt {
    it.fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Elementary divisors from determinantal divisors `D_k` (gcd of the
/// `k x k` minors): `d_k = D_k / D_{k-1}`.
fn from_determinantal(ds: &[BigInt]) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(ds.len());
    let mut prev = BigInt::from(1);
    for d in ds {
        if d.is_zero() {
            out.push(BigInt::zero());
        } else {
            out.push(d / &prev);
            prev = d.clone();
        }
    }
    out
}

/// Divisors of the 3x2 matrix with columns `a`, `b`.
pub fn pair_divisors(a: &IVec3, b: &IVec3) -> Vec<BigInt> {
    let d1 = gcd_all(a.0.iter().chain(b.0.iter()));
    let d2 = gcd_all(a.cross(b).0.iter());
    from_determinantal(&[d1, d2])
}

pub fn triple_divisors(a: &IVec3, b: &IVec3, c: &IVec3) -> Vec<BigInt> {
    let d1 = gcd_all(a.0.iter().chain(b.0.iter()).chain(c.0.iter()));
    // 2x2 minors of the matrix with columns a, b, c.
    let minors: Vec<BigInt> = [a.cross(b), b.cross(c), a.cross(c)].into_iter().flat_map(|v| v.0).collect();
    let d2 = gcd_all(minors.iter());
    let d3 = super::ivec::det3(a, b, c).abs();
    from_determinantal(&[d1, d2, d3])
}

/// `<a,b>_Z` and `<b,c>_Z` meet exactly in `Zb`: both pairs saturated
/// (divisors (1,1)), the three vectors of full rank, and `b` primitive.
pub fn intersection_is_line(a: &IVec3, b: &IVec3, c: &IVec3) -> bool {
    let one = |d: &Vec<BigInt>| d.iter().all(|x| x == &BigInt::from(1));
    one(&pair_divisors(a, b))
        && one(&pair_divisors(b, c))
        && triple_divisors(a, b, c).iter().all(|x| !x.is_zero())
        && b.is_primitive_point()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ivec::{det3, is_primitive_pair};
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn known_forms() {
        assert_eq!(elementary_divisors(&m(&[&[2, 0], &[0, 3], &[0, 0]])), ints(&[1, 6]));
        assert_eq!(elementary_divisors(&m(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]])), ints(&[2, 6, 12]));
        assert_eq!(elementary_divisors(&m(&[&[1, 2], &[2, 4], &[3, 6]])), ints(&[1, 0]));
    }

    #[test]
    fn step_fixture_intersection() {
        let (e1, e2) = (IVec3::e(0), IVec3::e(1));
        assert!(intersection_is_line(&e1, &e2, &IVec3::new(77, 0, 12)));
        assert!(!intersection_is_line(&e1, &e2, &IVec3::new(1, 1, 0)));
    }

    fn small() -> impl Strategy<Value = IVec3> {
        (-20i64..=20, -20i64..=20, -20i64..=20).prop_map(|(a, b, c)| IVec3::new(a, b, c))
    }

    proptest! {
        #[test]
        fn product_matches_determinant(a in small(), b in small(), c in small()) {
            let d = triple_divisors(&a, &b, &c);
            let p: BigInt = d.iter().product();
            prop_assert_eq!(p, det3(&a, &b, &c).abs());
        }

        #[test]
        fn determinantal_matches_reduction(a in small(), b in small(), c in small()) {
            let rows = |vs: &[&IVec3]| -> Vec<Vec<BigInt>> {
                (0..3).map(|i| vs.iter().map(|v| v.0[i].clone()).collect()).collect()
            };
            prop_assert_eq!(triple_divisors(&a, &b, &c), elementary_divisors(&rows(&[&a, &b, &c])));
            prop_assert_eq!(pair_divisors(&a, &b), elementary_divisors(&rows(&[&a, &b])));
        }

        #[test]
        fn pair_divisors_match_cross_content(a in small(), b in small()) {
            let d = pair_divisors(&a, &b);
            prop_assert_eq!(&d[0] * &d[1], a.cross(&b).content());
            prop_assert_eq!(d == ints(&[1, 1]), is_primitive_pair(&a, &b));
        }
    }
}
