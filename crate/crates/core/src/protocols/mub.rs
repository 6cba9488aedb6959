//! Complete sets of mutually unbiased bases in prime-power dimensions.
//!
//! Odd characteristic uses the quadratic-phase construction
//! `v_{a,b}(x) = ω^{tr(a x² + b x)} / √q`; characteristic two uses joint
//! eigenbases of commuting Pauli groups `{X(u) Z(M_a u)}` with
//! `M_a[i][j] = tr(a β_i β_j)` over a polynomial basis `β_i`.
//! Each set starts with the computational basis followed by one basis per
//! field element in encoding order.

use crate::error::{Result, TomoError};
use crate::quantum::{CMatrix, ProjectiveBasis, C64};

/// Finite field `GF(p^m)`; elements are encoded as integers whose base-`p`
/// digits are polynomial coefficients, lowest degree first.
#[derive(Debug, Clone)]
pub struct GaloisField {
    p: usize,
    m: usize,
    mul_table: Vec<usize>,
    trace_table: Vec<usize>,
}

fn prime_power(n: usize) -> Option<(usize, usize)> {
    if n < 2 {
        return None;
    }
    let p = (2..=n).find(|d| n % d == 0)?;
    let mut rest = n;
    let mut m = 0;
    while rest % p == 0 {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

/// Remainder of `num` modulo the monic polynomial `den` over `GF(p)`.
fn poly_rem(num: &[usize], den: &[usize], p: usize) -> Vec<usize> {
    let mut r = num.to_vec();
    let dd = den.len() - 1;
    while r.len() > dd {
        let lead = r.pop().unwrap();
        if lead != 0 {
            let shift = r.len() - dd;
            for (i, &c) in den[..dd].iter().enumerate() {
                r[shift + i] = (r[shift + i] + p * p - lead * c % p) % p;
            }
        }
    }
    r
}

fn digits(mut x: usize, p: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let d = x % p;
            x /= p;
            d
        })
        .collect()
}

fn is_irreducible(poly: &[usize], p: usize) -> bool {
    let m = poly.len() - 1;
    for deg in 1..=m / 2 {
        for low in 0..p.pow(deg as u32) {
            let mut divisor = digits(low, p, deg);
            divisor.push(1);
            if poly_rem(poly, &divisor, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl GaloisField {
    pub fn new(q: usize) -> Result<Self> {
        let (p, m) = prime_power(q).ok_or(TomoError::UnsupportedDimension(q))?;
        // First monic irreducible polynomial of degree m in encoding order.
        let modulus = (0..q)
            .map(|low| {
                let mut poly = digits(low, p, m);
                poly.push(1);
                poly
            })
            .find(|poly| is_irreducible(poly, p))
            .expect("irreducible polynomials exist in every degree");
        let encode = |coeffs: &[usize]| coeffs.iter().rev().fold(0, |acc, &c| acc * p + c);
        let mut mul_table = vec![0; q * q];
        for x in 0..q {
            for y in 0..q {
                let (dx, dy) = (digits(x, p, m), digits(y, p, m));
                let mut prod = vec![0; 2 * m - 1];
                for i in 0..m {
                    for j in 0..m {
                        prod[i + j] = (prod[i + j] + dx[i] * dy[j]) % p;
                    }
                }
                let mut r = poly_rem(&prod, &modulus, p);
                r.resize(m, 0);
                mul_table[x * q + y] = encode(&r);
            }
        }
        let mut field = Self { p, m, mul_table, trace_table: Vec::new() };
        // tr(x) = x + x^p + … + x^{p^{m−1}} lies in the prime subfield.
        field.trace_table = (0..q)
            .map(|x| {
                let mut acc = 0;
                let mut power = x;
                for _ in 0..m {
                    acc = field.add(acc, power);
                    power = field.pow(power, p);
                }
                debug_assert!(acc < p);
                acc
            })
            .collect();
        Ok(field)
    }

    pub fn order(&self) -> usize {
        self.p.pow(self.m as u32)
    }

    pub fn characteristic(&self) -> usize {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn add(&self, x: usize, y: usize) -> usize {
        let (dx, dy) = (digits(x, self.p, self.m), digits(y, self.p, self.m));
        dx.iter().zip(&dy).rev().fold(0, |acc, (a, b)| acc * self.p + (a + b) % self.p)
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.mul_table[x * self.order() + y]
    }

    pub fn pow(&self, x: usize, e: usize) -> usize {
        (0..e).fold(1, |acc, _| self.mul(acc, x))
    }

    /// Absolute trace onto `GF(p)`.
    pub fn trace(&self, x: usize) -> usize {
        self.trace_table[x]
    }
}

/// Dimensions for which [`mub_set`] is available.
pub fn mub_supported(dim: usize) -> bool {
    prime_power(dim).is_some()
}

/// `D + 1` mutually unbiased bases for a prime-power `D`.
pub fn mub_set(dim: usize) -> Result<Vec<ProjectiveBasis>> {
    let field = GaloisField::new(dim)?;
    let mut bases = vec![ProjectiveBasis::computational(dim)];
    if field.characteristic() == 2 {
        for a in 0..dim {
            bases.push(qubit_stabilizer_basis(&field, a));
        }
    } else {
        let p = field.characteristic() as f64;
        let scale = 1.0 / (dim as f64).sqrt();
        for a in 0..dim {
            let u = CMatrix::from_fn(dim, dim, |x, b| {
                let xx = field.mul(x, x);
                let phase = field.add(field.mul(a, xx), field.mul(b, x));
                let k = field.trace(phase) as f64;
                C64::from_polar(scale, 2.0 * std::f64::consts::PI * k / p)
            });
            bases.push(ProjectiveBasis::from_unitary(u)?);
        }
    }
    Ok(bases)
}

/// Hermitian Pauli `i^{u·v} X^u Z^v` on `n` qubits, first qubit most significant.
fn pauli(n: usize, u: usize, v: usize) -> CMatrix {
    let dim = 1 << n;
    let phase = match (u & v).count_ones() % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    let mut m = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        let sign = if (v & x).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        m[(x ^ u, x)] = phase * sign;
    }
    m
}

fn qubit_stabilizer_basis(field: &GaloisField, a: usize) -> ProjectiveBasis {
    let n = field.degree();
    let dim = 1 << n;
    // Polynomial basis β_i = t^i, encoded as p^i = 2^i; bit i of a qubit
    // index corresponds to qubit i counted from the most significant end.
    let beta: Vec<usize> = (0..n).map(|i| 1 << i).collect();
    let bit = |i: usize| 1usize << (n - 1 - i);
    let generators: Vec<CMatrix> = (0..n)
        .map(|j| {
            let u = bit(j);
            let v = (0..n)
                .filter(|&i| field.trace(field.mul(a, field.mul(beta[i], beta[j]))) == 1)
                .fold(0, |acc, i| acc | bit(i));
            pauli(n, u, v)
        })
        .collect();
    let identity = CMatrix::identity(dim, dim);
    let mut u = CMatrix::zeros(dim, dim);
    for s in 0..dim {
        let mut proj = identity.clone();
        for (j, g) in generators.iter().enumerate() {
            let sign = if s & (1 << j) == 0 { 1.0 } else { -1.0 };
            proj = &proj * (&identity + g.scale(sign)).scale(0.5);
        }
        let col = (0..dim).max_by(|&x, &y| proj.column(x).norm().total_cmp(&proj.column(y).norm())).unwrap();
        let v = proj.column(col).normalize();
        u.set_column(s, &v);
    }
    ProjectiveBasis::from_unitary(u).expect("stabilizer eigenbases are orthonormal")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_bias(bases: &[ProjectiveBasis]) -> f64 {
        let d = bases[0].dim() as f64;
        let mut worst: f64 = 0.0;
        for (i, a) in bases.iter().enumerate() {
            for b in &bases[i + 1..] {
                let g = a.unitary().adjoint() * b.unitary();
                for z in g.iter() {
                    worst = worst.max((z.norm_sqr() - 1.0 / d).abs());
                }
            }
        }
        worst
    }

    #[test]
    fn field_axioms_hold() {
        for q in [2, 3, 4, 5, 7, 8, 9, 16, 25, 27] {
            let f = GaloisField::new(q).unwrap();
            for x in 0..q {
                assert_eq!(f.mul(x, 1), x);
                assert_eq!(f.add(x, 0), x);
                if x != 0 {
                    assert_eq!((0..q).filter(|&y| f.mul(x, y) == 1).count(), 1, "q {q} x {x}");
                }
                for y in 0..q {
                    assert_eq!(f.mul(x, y), f.mul(y, x));
                    for z in 0..q {
                        assert_eq!(f.mul(x, f.add(y, z)), f.add(f.mul(x, y), f.mul(x, z)));
                    }
                }
            }
            // The trace is onto GF(p) and additive.
            assert!((0..q).any(|x| f.trace(x) != 0));
            for x in 0..q {
                for y in 0..q {
                    assert_eq!(f.trace(f.add(x, y)), (f.trace(x) + f.trace(y)) % f.characteristic());
                }
            }
        }
        assert!(GaloisField::new(6).is_err());
    }

    #[test]
    fn unbiased_in_all_supported_dimensions() {
        for d in [2, 3, 4, 5, 7, 8, 9] {
            let bases = mub_set(d).unwrap();
            assert_eq!(bases.len(), d + 1);
            for b in &bases {
                assert!(b.orthonormality_residual() < 1e-12);
            }
            assert!(max_bias(&bases) < 1e-10, "d {d}: {}", max_bias(&bases));
        }
    }

    #[test]
    fn qubit_set_is_z_x_y() {
        let bases = mub_set(2).unwrap();
        assert_eq!(bases[0].unitary(), &CMatrix::identity(2, 2));
        let x = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        );
        let y = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        );
        for (basis, op) in bases[1..].iter().zip([x, y]) {
            let diag = basis.unitary().adjoint() * &op * basis.unitary();
            assert!(diag[(0, 1)].norm() < 1e-12);
            assert!((diag[(0, 0)].re.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unsupported_dimensions() {
        assert!(matches!(mub_set(6), Err(TomoError::UnsupportedDimension(6))));
        assert!(matches!(mub_set(36), Err(TomoError::UnsupportedDimension(36))));
        assert!(!mub_supported(36));
    }
}
