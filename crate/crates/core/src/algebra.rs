//! Pointwise exterior algebra of complex (p,q)-forms and
//! endomorphism-valued forms in complex dimension m <= 3.
//!
//! Coefficients are stored on strictly increasing multi-indices only; signs
//! from reordering are absorbed into the coefficients, so representations
//! are unique and equality is testable. Multi-indices are bitmasks over
//! `{0, .., m-1}`; the basis element for `(I, J)` is `dz^I ^ dzbar^J` with
//! both factors sorted ascending.

use crate::error::{KgError, Result};
use crate::C64;
use nalgebra::DMatrix;

/// Binomial coefficient for the tiny range used here.
pub fn binom(m: usize, k: usize) -> usize {
    if k > m {
        return 0;
    }
    match (m, k) {
        (_, 0) => 1,
        (1, 1) => 1,
        (2, 1) => 2,
        (2, 2) => 1,
        (3, 1) => 3,
        (3, 2) => 3,
        (3, 3) => 1,
        _ => 0,
    }
}

/// Lexicographically ordered k-subsets of `{0,..,m-1}` as bitmasks.
pub fn subsets(m: usize, k: usize) -> &'static [u8] {
    const S0: [u8; 1] = [0b000];
    const S11: [u8; 1] = [0b1];
    const S21: [u8; 2] = [0b01, 0b10];
    const S22: [u8; 1] = [0b11];
    const S31: [u8; 3] = [0b001, 0b010, 0b100];
    const S32: [u8; 3] = [0b011, 0b101, 0b110];
    const S33: [u8; 1] = [0b111];
    match (m, k) {
        (_, 0) => &S0,
        (1, 1) => &S11,
        (2, 1) => &S21,
        (2, 2) => &S22,
        (3, 1) => &S31,
        (3, 2) => &S32,
        (3, 3) => &S33,
        _ => &[],
    }
}

fn index_of(m: usize, k: usize, mask: u8) -> usize {
    subsets(m, k).iter().position(|&s| s == mask).expect("mask not canonical")
}

/// Sign of merging two disjoint sorted index sets (number of inversions in
/// the concatenation a ++ b).
fn merge_sign(a: u8, b: u8) -> f64 {
    let mut inv = 0u32;
    let mut bb = b;
    while bb != 0 {
        let y = bb.trailing_zeros();
        inv += (a >> (y + 1)).count_ones();
        bb &= bb - 1;
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Permutations of 0..n with signs, n <= 3.
fn perms(n: usize) -> &'static [(&'static [usize], f64)] {
    const P1: [(&[usize], f64); 1] = [(&[0], 1.0)];
    const P2: [(&[usize], f64); 2] = [(&[0, 1], 1.0), (&[1, 0], -1.0)];
    const P3: [(&[usize], f64); 6] = [
        (&[0, 1, 2], 1.0),
        (&[0, 2, 1], -1.0),
        (&[1, 0, 2], -1.0),
        (&[1, 2, 0], 1.0),
        (&[2, 0, 1], 1.0),
        (&[2, 1, 0], -1.0),
    ];
    match n {
        1 => &P1,
        2 => &P2,
        3 => &P3,
        _ => panic!("perms: n out of range"),
    }
}

const MAX_COEFFS: usize = 9;

/// A pointwise (p,q)-form in complex dimension `m <= 3`.
///
/// Degrees with `p > m` or `q > m` carry no basis elements and are
/// identically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQForm {
    pub m: usize,
    pub p: usize,
    pub q: usize,
    coeffs: [C64; MAX_COEFFS],
}

impl PQForm {
    pub fn zero(m: usize, p: usize, q: usize) -> Self {
        assert!((1..=3).contains(&m), "complex dimension must be 1..=3");
        PQForm { m, p, q, coeffs: [C64::new(0.0, 0.0); MAX_COEFFS] }
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        binom(self.m, self.p) * binom(self.m, self.q)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The (0,0)-form with value `c`.
    pub fn scalar(m: usize, c: C64) -> Self {
        let mut f = PQForm::zero(m, 0, 0);
        f.coeffs[0] = c;
        f
    }

    /// Basis form `dz^I ^ dzbar^J` for canonical (sorted) masks.
    pub fn basis(m: usize, imask: u8, jmask: u8) -> Self {
        let p = imask.count_ones() as usize;
        let q = jmask.count_ones() as usize;
        let mut f = PQForm::zero(m, p, q);
        f.set(imask, jmask, C64::new(1.0, 0.0));
        f
    }

    fn slot(&self, imask: u8, jmask: u8) -> usize {
        index_of(self.m, self.p, imask) * binom(self.m, self.q) + index_of(self.m, self.q, jmask)
    }

    /// Coefficient on the canonical basis element `(imask, jmask)`.
    pub fn coeff(&self, imask: u8, jmask: u8) -> C64 {
        self.coeffs[self.slot(imask, jmask)]
    }

    pub fn set(&mut self, imask: u8, jmask: u8, c: C64) {
        let s = self.slot(imask, jmask);
        self.coeffs[s] = c;
    }

    pub fn add_to(&mut self, imask: u8, jmask: u8, c: C64) {
        let s = self.slot(imask, jmask);
        self.coeffs[s] += c;
    }

    /// Accessor for possibly unsorted index lists: returns the signed
    /// canonical value (zero on repeated indices).
    pub fn coeff_signed(&self, i_list: &[usize], j_list: &[usize]) -> C64 {
        fn sort_sign(list: &[usize]) -> Option<(u8, f64)> {
            let mut v: Vec<usize> = list.to_vec();
            let mut sign = 1.0;
            for i in 0..v.len() {
                for j in (i + 1)..v.len() {
                    if v[i] == v[j] {
                        return None;
                    }
                    if v[i] > v[j] {
                        v.swap(i, j);
                        sign = -sign;
                    }
                }
            }
            let mut mask = 0u8;
            for x in v {
                mask |= 1 << x;
            }
            Some((mask, sign))
        }
        let (im, isign) = match sort_sign(i_list) {
            Some(x) => x,
            None => return C64::new(0.0, 0.0),
        };
        let (jm, jsign) = match sort_sign(j_list) {
            Some(x) => x,
            None => return C64::new(0.0, 0.0),
        };
        self.coeff(im, jm) * isign * jsign
    }

    /// Coefficient of the canonical top element `dz^{1..m} ^ dzbar^{1..m}`.
    pub fn top(&self) -> C64 {
        assert!(self.p == self.m && self.q == self.m, "top() requires an (m,m)-form");
        self.coeffs[0]
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = *self;
        for x in out.coeffs.iter_mut() {
            *x *= c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(
            self.m == other.m && self.p == other.p && self.q == other.q,
            "form add: degree mismatch"
        );
        let mut out = *self;
        for (x, y) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs[..self.len()].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Complex conjugate form: `(p,q) -> (q,p)` with the sign
    /// `(-1)^{pq}` from reordering `dzbar^I ^ dz^J`.
    pub fn conj(&self) -> Self {
        let mut out = PQForm::zero(self.m, self.q, self.p);
        let sign = if (self.p * self.q) % 2 == 0 { 1.0 } else { -1.0 };
        for &im in subsets(self.m, self.p) {
            for &jm in subsets(self.m, self.q) {
                out.set(jm, im, self.coeff(im, jm).conj() * sign);
            }
        }
        out
    }

    /// Sup distance from the conjugate; zero for real forms (p == q only).
    pub fn reality_defect(&self) -> f64 {
        if self.p != self.q {
            return f64::INFINITY;
        }
        self.sub(&self.conj()).norm_inf()
    }
}

/// Wedge product of two pointwise forms.
pub fn wedge(a: &PQForm, b: &PQForm) -> Result<PQForm> {
    if a.m != b.m {
        return Err(KgError::invalid(format!(
            "wedge: dimension mismatch {} vs {}",
            a.m, b.m
        )));
    }
    let m = a.m;
    let (p, q) = (a.p + b.p, a.q + b.q);
    let mut out = PQForm::zero(m, p, q);
    if out.is_empty() {
        return Ok(out);
    }
    let cross = if (b.p * a.q) % 2 == 0 { 1.0 } else { -1.0 };
    for &i1 in subsets(m, a.p) {
        for &j1 in subsets(m, a.q) {
            let c1 = a.coeff(i1, j1);
            if c1 == C64::new(0.0, 0.0) {
                continue;
            }
            for &i2 in subsets(m, b.p) {
                if i1 & i2 != 0 {
                    continue;
                }
                for &j2 in subsets(m, b.q) {
                    if j1 & j2 != 0 {
                        continue;
                    }
                    let c2 = b.coeff(i2, j2);
                    if c2 == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let sign = cross * merge_sign(i1, i2) * merge_sign(j1, j2);
                    out.add_to(i1 | i2, j1 | j2, c1 * c2 * sign);
                }
            }
        }
    }
    Ok(out)
}

/// `k`-fold wedge power (`k = 0` gives the scalar 1).
pub fn wedge_pow(a: &PQForm, k: usize) -> Result<PQForm> {
    let mut acc = PQForm::scalar(a.m, C64::new(1.0, 0.0));
    for _ in 0..k {
        acc = wedge(&acc, a)?;
    }
    Ok(acc)
}

/// An m x m endomorphism-valued form; row = upper index, column = lower.
/// All entries share one (p,q) degree.
#[derive(Debug, Clone)]
pub struct MatrixPQForm {
    pub m: usize,
    pub deg: (usize, usize),
    entries: [[PQForm; 3]; 3],
}

impl MatrixPQForm {
    pub fn zero(m: usize, p: usize, q: usize) -> Self {
        MatrixPQForm { m, deg: (p, q), entries: [[PQForm::zero(m, p, q); 3]; 3] }
    }

    /// Wrap a plain complex matrix as a (0,0)-degree form matrix.
    pub fn from_scalar_matrix(mat: &DMatrix<C64>) -> Self {
        let m = mat.nrows();
        assert!(mat.is_square() && (1..=3).contains(&m));
        let mut out = MatrixPQForm::zero(m, 0, 0);
        for i in 0..m {
            for j in 0..m {
                out.entries[i][j] = PQForm::scalar(m, mat[(i, j)]);
            }
        }
        out
    }

    /// `form * identity`.
    pub fn scalar_times_identity(m: usize, f: &PQForm) -> Self {
        let mut out = MatrixPQForm::zero(m, f.p, f.q);
        for i in 0..m {
            out.entries[i][i] = *f;
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> &PQForm {
        &self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: PQForm) {
        assert!(f.m == self.m && (f.p, f.q) == self.deg, "entry degree mismatch");
        self.entries[i][j] = f;
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.m == other.m && self.deg == other.deg);
        let mut out = self.clone();
        for i in 0..self.m {
            for j in 0..self.m {
                out.entries[i][j] = out.entries[i][j].add(&other.entries[i][j]);
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for i in 0..self.m {
            for j in 0..self.m {
                out.entries[i][j] = out.entries[i][j].scale(c);
            }
        }
        out
    }

    pub fn trace(&self) -> PQForm {
        let mut t = PQForm::zero(self.m, self.deg.0, self.deg.1);
        for i in 0..self.m {
            t = t.add(&self.entries[i][i]);
        }
        t
    }

    fn check_even_degree(&self) -> Result<()> {
        if (self.deg.0 + self.deg.1) % 2 != 0 {
            return Err(KgError::invalid(
                "matrix entries must have even total degree (commuting forms)",
            ));
        }
        Ok(())
    }
}

/// Determinant over a commuting form degree, with rows drawn from
/// potentially different matrices (`rows[i]` supplies row `i`).
fn det_rows(rows: &[&MatrixPQForm]) -> Result<PQForm> {
    let n = rows.len();
    let m = rows[0].m;
    let one = PQForm::scalar(m, C64::new(1.0, 0.0));
    let mut acc: Option<PQForm> = None;
    for (tau, sgn) in perms(n) {
        let mut prod = one;
        for i in 0..n {
            prod = wedge(&prod, rows[i].get(i, tau[i]))?;
        }
        let term = prod.scale(C64::new(*sgn, 0.0));
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term),
        });
    }
    Ok(acc.unwrap())
}

/// Determinant of a form-valued matrix via the permutation expansion.
///
/// The public contract takes degree-(1,1) entries (well-defined because
/// (1,1)-forms commute under wedge); (0,0) entries are accepted for the
/// scalar embedding.
pub fn form_det(mat: &MatrixPQForm) -> Result<PQForm> {
    mat.check_even_degree()?;
    if mat.deg != (1, 1) && mat.deg != (0, 0) {
        return Err(KgError::invalid(format!(
            "form_det: entries must have degree (1,1) or (0,0), got {:?}",
            mat.deg
        )));
    }
    let rows: Vec<&MatrixPQForm> = (0..mat.m).map(|_| mat).collect();
    det_rows(&rows)
}

/// Polarization of the determinant: the coefficient of `m! t_1 .. t_m`
/// in `det(t_1 A_1 + .. + t_m A_m)`. Fully symmetric and multilinear;
/// `mixed_cm(A,..,A) = det A`.
pub fn mixed_cm(mats: &[&MatrixPQForm]) -> Result<PQForm> {
    let n = mats.len();
    if n == 0 || n > 3 {
        return Err(KgError::invalid("mixed_cm: need 1..=3 arguments"));
    }
    let m = mats[0].m;
    for a in mats {
        if a.m != m {
            return Err(KgError::invalid("mixed_cm: size mismatch"));
        }
        a.check_even_degree()?;
    }
    if n != m {
        return Err(KgError::invalid(format!(
            "mixed_cm: {} arguments for {}x{} matrices",
            n, m, m
        )));
    }
    let mut acc: Option<PQForm> = None;
    for (sigma, _) in perms(n) {
        let rows: Vec<&MatrixPQForm> = (0..n).map(|i| mats[sigma[i]]).collect();
        let term = det_rows(&rows)?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term),
        });
    }
    let mut fact = 1.0;
    for k in 2..=n {
        fact *= k as f64;
    }
    Ok(acc.unwrap().scale(C64::new(1.0 / fact, 0.0)))
}

/// Scalar-matrix convenience wrapper for [`mixed_cm`].
pub fn mixed_cm_scalar(mats: &[DMatrix<C64>]) -> Result<C64> {
    let wrapped: Vec<MatrixPQForm> =
        mats.iter().map(MatrixPQForm::from_scalar_matrix).collect();
    let refs: Vec<&MatrixPQForm> = wrapped.iter().collect();
    Ok(mixed_cm(&refs)?.coeff(0, 0))
}

/// Coefficients `[c_0, c_1, .., c_m]` of `det(I + t A)`; `c_0 = 1`,
/// `c_1 = tr A`, `c_m = det A`. `c_k` is the sum of the k x k principal
/// minors (wedge-valued when `A` is form-valued).
pub fn char_coefficients(mat: &MatrixPQForm) -> Result<Vec<PQForm>> {
    mat.check_even_degree()?;
    let m = mat.m;
    let mut out = Vec::with_capacity(m + 1);
    out.push(PQForm::scalar(m, C64::new(1.0, 0.0)));
    for k in 1..=m {
        let mut ck: Option<PQForm> = None;
        for &smask in subsets(m, k) {
            let idx: Vec<usize> =
                (0..m).filter(|i| smask & (1 << i) != 0).collect();
            // principal minor det over the index subset
            let one = PQForm::scalar(m, C64::new(1.0, 0.0));
            let mut minor: Option<PQForm> = None;
            for (tau, sgn) in perms(k) {
                let mut prod = one;
                for (r, &row) in idx.iter().enumerate() {
                    prod = wedge(&prod, mat.get(row, idx[tau[r]]))?;
                }
                let term = prod.scale(C64::new(*sgn, 0.0));
                minor = Some(match minor {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
            let minor = minor.unwrap();
            ck = Some(match ck {
                None => minor,
                Some(a) => a.add(&minor),
            });
        }
        out.push(ck.unwrap());
    }
    Ok(out)
}

/// Scalar-matrix convenience wrapper for [`char_coefficients`].
pub fn char_coefficients_scalar(mat: &DMatrix<C64>) -> Result<Vec<C64>> {
    let wrapped = MatrixPQForm::from_scalar_matrix(mat);
    Ok(char_coefficients(&wrapped)?.iter().map(|f| f.coeff(0, 0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::I;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn wedge_basis_product_m2() {
        // (dz^1 ^ dzbar^1) ^ (dz^2 ^ dzbar^2): in canonical storage the top
        // basis is dz^{12} ^ dzbar^{12}, and moving dz^2 past dzbar^1 costs
        // one sign.
        let a = PQForm::basis(2, 0b01, 0b01);
        let b = PQForm::basis(2, 0b10, 0b10);
        let w = wedge(&a, &b).unwrap();
        assert_eq!(w.coeff(0b11, 0b11), c(-1.0, 0.0));
    }

    #[test]
    fn odd_square_is_zero() {
        let mut alpha = PQForm::zero(2, 1, 0);
        alpha.set(0b01, 0, c(1.0, 2.0));
        alpha.set(0b10, 0, c(-0.5, 0.3));
        let w = wedge(&alpha, &alpha).unwrap();
        assert!(w.norm_inf() < 1e-15);
    }

    #[test]
    fn wedge_multilinear_example() {
        // a = 2 dz^1^dzbar^1 + 3 dz^1^dzbar^2, b = 5 dz^2^dzbar^2.
        // The dzbar^2-repeated term dies; the surviving term is
        // 10 (dz^1^dzbar^1)^(dz^2^dzbar^2) = -10 dz^{12}^dzbar^{12}.
        let mut a = PQForm::zero(2, 1, 1);
        a.set(0b01, 0b01, c(2.0, 0.0));
        a.set(0b01, 0b10, c(3.0, 0.0));
        let mut b = PQForm::zero(2, 1, 1);
        b.set(0b10, 0b10, c(5.0, 0.0));
        let w = wedge(&a, &b).unwrap();
        assert_eq!(w.coeff(0b11, 0b11), c(-10.0, 0.0));
    }

    #[test]
    fn signed_accessor() {
        let mut a = PQForm::zero(2, 2, 1);
        a.set(0b11, 0b01, c(7.0, 0.0));
        // swapped holomorphic indices flip the sign
        assert_eq!(a.coeff_signed(&[1, 0], &[0]), c(-7.0, 0.0));
        assert_eq!(a.coeff_signed(&[0, 1], &[0]), c(7.0, 0.0));
        assert_eq!(a.coeff_signed(&[0, 0], &[0]), c(0.0, 0.0));
    }

    #[test]
    fn graded_commutativity_random() {
        let mut rng = CounterRng::new(11).stream("algebra-comm");
        for m in 1..=3usize {
            for (pa, qa, pb, qb) in [(1, 0, 0, 1), (1, 1, 1, 0), (1, 1, 1, 1), (2, 1, 0, 1)] {
                if pa > m || qa > m || pb > m || qb > m {
                    continue;
                }
                let mut a = PQForm::zero(m, pa, qa);
                let mut b = PQForm::zero(m, pb, qb);
                for &im in subsets(m, pa) {
                    for &jm in subsets(m, qa) {
                        a.set(im, jm, rng.complex_normal());
                    }
                }
                for &im in subsets(m, pb) {
                    for &jm in subsets(m, qb) {
                        b.set(im, jm, rng.complex_normal());
                    }
                }
                let ab = wedge(&a, &b).unwrap();
                let ba = wedge(&b, &a).unwrap();
                let sign = if ((pa + qa) * (pb + qb)) % 2 == 0 { 1.0 } else { -1.0 };
                let diff = ab.sub(&ba.scale(c(sign, 0.0))).norm_inf();
                assert!(diff < 1e-12 * (1.0 + ab.norm_inf()), "m={} deg mismatch {}", m, diff);
            }
        }
    }

    #[test]
    fn associativity_random() {
        let mut rng = CounterRng::new(12).stream("algebra-assoc");
        let m = 3;
        let mk = |rng: &mut CounterRng, p: usize, q: usize| {
            let mut f = PQForm::zero(m, p, q);
            for &im in subsets(m, p) {
                for &jm in subsets(m, q) {
                    f.set(im, jm, rng.complex_normal());
                }
            }
            f
        };
        for _ in 0..20 {
            let a = mk(&mut rng, 1, 0);
            let b = mk(&mut rng, 0, 1);
            let cc = mk(&mut rng, 1, 1);
            let l = wedge(&wedge(&a, &b).unwrap(), &cc).unwrap();
            let r = wedge(&a, &wedge(&b, &cc).unwrap()).unwrap();
            assert!(l.sub(&r).norm_inf() < 1e-12 * (1.0 + l.norm_inf()));
        }
    }

    #[test]
    fn form_det_m1_identity() {
        let omega = PQForm::basis(1, 0b1, 0b1).scale(I * c(3.0, 0.0));
        let mat = MatrixPQForm::scalar_times_identity(1, &omega);
        let d = form_det(&mat).unwrap();
        assert_eq!(d.coeff(0b1, 0b1), omega.coeff(0b1, 0b1));
    }

    #[test]
    fn form_det_diagonal_m2() {
        let mut alpha = PQForm::zero(2, 1, 1);
        alpha.set(0b01, 0b01, c(2.0, 1.0));
        let mut beta = PQForm::zero(2, 1, 1);
        beta.set(0b10, 0b10, c(0.0, -1.0));
        let mut mat = MatrixPQForm::zero(2, 1, 1);
        mat.set(0, 0, alpha);
        mat.set(1, 1, beta);
        let d = form_det(&mat).unwrap();
        let ab = wedge(&alpha, &beta).unwrap();
        assert!(d.sub(&ab).norm_inf() < 1e-15);
    }

    #[test]
    fn form_det_omega_identity_m2() {
        // omega = i(dz^1^dzbar^1 + dz^2^dzbar^2); det(omega I) = omega^omega.
        let mut omega = PQForm::zero(2, 1, 1);
        omega.set(0b01, 0b01, I);
        omega.set(0b10, 0b10, I);
        let mat = MatrixPQForm::scalar_times_identity(2, &omega);
        let d = form_det(&mat).unwrap();
        let ww = wedge(&omega, &omega).unwrap();
        assert!(d.sub(&ww).norm_inf() < 1e-15);
        // omega^omega = 2 (i dz^1 dzbar^1)^(i dz^2 dzbar^2) = +2 dz^{12} dzbar^{12}
        assert_eq!(ww.coeff(0b11, 0b11), c(2.0, 0.0));
    }

    #[test]
    fn mixed_cm_diag_example() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0, 0.0), c(4.0, 0.0)]));
        let v = mixed_cm_scalar(&[a, b]).unwrap();
        assert!((v - c(5.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn mixed_cm_identity() {
        let eye = DMatrix::<C64>::identity(2, 2);
        let v = mixed_cm_scalar(&[eye.clone(), eye]).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn mixed_cm_diagonal_is_det() {
        let mut rng = CounterRng::new(13).stream("algebra-det");
        for m in 1..=3usize {
            for _ in 0..20 {
                let a = DMatrix::from_fn(m, m, |_, _| rng.complex_normal());
                let det = a.clone().determinant();
                let args: Vec<DMatrix<C64>> = (0..m).map(|_| a.clone()).collect();
                let v = mixed_cm_scalar(&args).unwrap();
                assert!(
                    (v - det).norm() <= 1e-12 * (1.0 + det.norm()),
                    "m={} det mismatch: {} vs {}",
                    m,
                    v,
                    det
                );
            }
        }
    }

    #[test]
    fn char_coefficients_zero_and_diag() {
        let z = DMatrix::<C64>::zeros(3, 3);
        let cs = char_coefficients_scalar(&z).unwrap();
        assert_eq!(cs.len(), 4);
        assert!((cs[0] - c(1.0, 0.0)).norm() < 1e-15);
        for k in 1..=3 {
            assert!(cs[k].norm() < 1e-15);
        }
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(-1.0, 0.5)]));
        let cs = char_coefficients_scalar(&d).unwrap();
        assert!((cs[1] - c(1.0, 0.5)).norm() < 1e-14);
        assert!((cs[2] - c(-2.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn conj_and_reality() {
        // i dz^dzbar is real in dimension 1
        let f = PQForm::basis(1, 0b1, 0b1).scale(I);
        assert!(f.reality_defect() < 1e-15);
        let g = PQForm::basis(1, 0b1, 0b1).scale(c(1.0, 0.0));
        assert!(g.reality_defect() > 1.0);
    }
}
