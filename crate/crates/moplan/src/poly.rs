//! Sparse multivariate polynomials over a fixed, ordered variable space.
//!
//! The variable spaces that show up in this crate are small and structured:
//! scene constraints live in `(t, x_1..x_n)`, per-piece constraints in
//! `(t, u_i, v_i)`, and relaxations in `(u, v, z)` over all pieces. Monomials
//! are kept in graded-lexicographic order so every module that enumerates a
//! basis agrees on row/column labels.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A scalar variable in one of the structured spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// Time.
    T,
    /// Scene configuration coordinate `x_j` (0-based).
    X(usize),
    /// Piece offset coordinate `u_{i,j}` (0-based piece, 0-based coord).
    U { piece: usize, coord: usize },
    /// Piece velocity coordinate `v_{i,j}`.
    V { piece: usize, coord: usize },
    /// Piece length variable `z_i`.
    Z { piece: usize },
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(j) => write!(f, "x{}", j + 1),
            Var::U { piece, coord } => write!(f, "u{}_{}", piece + 1, coord + 1),
            Var::V { piece, coord } => write!(f, "v{}_{}", piece + 1, coord + 1),
            Var::Z { piece } => write!(f, "z{}", piece + 1),
        }
    }
}

/// An ordered list of scalar variables. The order is fixed at construction
/// and every exponent vector in this space has exactly `len()` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpace {
    /// Configuration dimension of the underlying planning problem.
    pub n: usize,
    /// Number of path pieces (0 when not piece-structured).
    pub s: usize,
    kinds: Vec<Var>,
}

impl VariableSpace {
    pub fn new(n: usize, s: usize, kinds: Vec<Var>) -> Arc<Self> {
        Arc::new(VariableSpace { n, s, kinds })
    }

    /// Scene space `(t, x_1..x_n)`.
    pub fn scene(n: usize) -> Arc<Self> {
        let mut kinds = vec![Var::T];
        kinds.extend((0..n).map(Var::X));
        Self::new(n, 0, kinds)
    }

    /// Per-piece constraint space `(t, u_i, v_i)`.
    pub fn piece(n: usize, piece: usize) -> Arc<Self> {
        let mut kinds = vec![Var::T];
        kinds.extend((0..n).map(|j| Var::U { piece, coord: j }));
        kinds.extend((0..n).map(|j| Var::V { piece, coord: j }));
        Self::new(n, 1, kinds)
    }

    /// Dense relaxation space `(u_1..u_s, v_1..v_s, z_1..z_s)`.
    pub fn relaxation(n: usize, s: usize) -> Arc<Self> {
        let mut kinds = Vec::with_capacity(s * (2 * n + 1));
        for i in 0..s {
            kinds.extend((0..n).map(|j| Var::U { piece: i, coord: j }));
        }
        for i in 0..s {
            kinds.extend((0..n).map(|j| Var::V { piece: i, coord: j }));
        }
        for i in 0..s {
            kinds.push(Var::Z { piece: i });
        }
        Self::new(n, s, kinds)
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kinds(&self) -> &[Var] {
        &self.kinds
    }

    pub fn var_at(&self, idx: usize) -> Var {
        self.kinds[idx]
    }

    pub fn index_of(&self, var: Var) -> Option<usize> {
        self.kinds.iter().position(|&k| k == var)
    }
}

/// Exponent vector with graded-lexicographic ordering: lower total degree
/// first; within a degree, larger leading exponents first, so for two
/// variables the degree-2 layer reads `y1^2, y1 y2, y2^2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn zero(arity: usize) -> Self {
        Monomial(vec![0; arity])
    }

    pub fn unit(arity: usize, idx: usize) -> Self {
        let mut e = vec![0; arity];
        e[idx] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => other.0.cmp(&self.0),
            ord => ord,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PolyError {
    #[error("polynomials live in different variable spaces")]
    MismatchedSpaces,
    #[error("point has {got} coordinates, space has {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("variable {0:?} not present in target space")]
    MissingVariable(Var),
}

/// Coefficients with magnitude below this are dropped after products to
/// bound term growth. Addition only drops exact cancellations.
pub const COEFF_CLEANUP_EPS: f64 = 1e-14;

/// Sparse multivariate polynomial with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    space: Arc<VariableSpace>,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(space: &Arc<VariableSpace>) -> Self {
        Polynomial {
            space: Arc::clone(space),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: &Arc<VariableSpace>, c: f64) -> Self {
        let mut p = Self::zero(space);
        if c != 0.0 {
            p.terms.insert(Monomial::zero(space.len()), c);
        }
        p
    }

    pub fn variable(space: &Arc<VariableSpace>, var: Var) -> Result<Self, PolyError> {
        let idx = space.index_of(var).ok_or(PolyError::MissingVariable(var))?;
        let mut p = Self::zero(space);
        p.terms.insert(Monomial::unit(space.len(), idx), 1.0);
        Ok(p)
    }

    pub fn from_terms(
        space: &Arc<VariableSpace>,
        terms: impl IntoIterator<Item = (Vec<u32>, f64)>,
    ) -> Result<Self, PolyError> {
        let mut p = Self::zero(space);
        for (exp, c) in terms {
            if exp.len() != space.len() {
                return Err(PolyError::DimensionMismatch {
                    got: exp.len(),
                    expected: space.len(),
                });
            }
            p.add_term(Monomial(exp), c);
        }
        Ok(p)
    }

    pub fn space(&self) -> &Arc<VariableSpace> {
        &self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Maximum total degree counting only the variables selected by `pick`.
    pub fn degree_in(&self, pick: impl Fn(Var) -> bool) -> u32 {
        let mask: Vec<bool> = self.space.kinds().iter().map(|&v| pick(v)).collect();
        self.terms
            .keys()
            .map(|m| {
                m.0.iter()
                    .zip(&mask)
                    .filter(|(_, &keep)| keep)
                    .map(|(&e, _)| e)
                    .sum::<u32>()
            })
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            let key = self
                .terms
                .iter()
                .find(|(_, &v)| v == 0.0)
                .map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        if self.space != other.space {
            return Err(PolyError::MismatchedSpaces);
        }
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        if c == 0.0 {
            return Self::zero(&self.space);
        }
        let mut out = Self::zero(&self.space);
        for (m, v) in self.terms() {
            out.terms.insert(m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        if self.space != other.space {
            return Err(PolyError::MismatchedSpaces);
        }
        let mut out = Self::zero(&self.space);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out.cleanup();
        Ok(out)
    }

    pub fn powi(&self, k: u32) -> Polynomial {
        let mut out = Self::constant(&self.space, 1.0);
        for _ in 0..k {
            out = out.mul(self).expect("same space");
        }
        out
    }

    fn cleanup(&mut self) {
        self.terms.retain(|_, c| c.abs() >= COEFF_CLEANUP_EPS);
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.space.len() {
            return Err(PolyError::DimensionMismatch {
                got: point.len(),
                expected: self.space.len(),
            });
        }
        let mut acc = 0.0;
        for (m, c) in self.terms() {
            let mut term = c;
            for (e, &x) in m.0.iter().zip(point) {
                for _ in 0..*e {
                    term *= x;
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Partial derivative with respect to the variable at `idx`.
    pub fn partial(&self, idx: usize) -> Polynomial {
        let mut out = Self::zero(&self.space);
        for (m, c) in self.terms() {
            let e = m.0[idx];
            if e == 0 {
                continue;
            }
            let mut exp = m.0.clone();
            exp[idx] -= 1;
            out.add_term(Monomial(exp), c * e as f64);
        }
        out
    }

    /// Substitute `var := replacement` (any polynomial in the same space)
    /// and expand. Powers of the replacement are cached per call.
    pub fn substitute(&self, var: Var, replacement: &Polynomial) -> Result<Polynomial, PolyError> {
        if self.space != *replacement.space() {
            return Err(PolyError::MismatchedSpaces);
        }
        let idx = self
            .space
            .index_of(var)
            .ok_or(PolyError::MissingVariable(var))?;
        let max_pow = self
            .terms
            .keys()
            .map(|m| m.0[idx])
            .max()
            .unwrap_or(0) as usize;
        let mut powers: Vec<Polynomial> = Vec::with_capacity(max_pow + 1);
        powers.push(Self::constant(&self.space, 1.0));
        for k in 1..=max_pow {
            powers.push(powers[k - 1].mul(replacement)?);
        }
        let mut out = Self::zero(&self.space);
        for (m, c) in self.terms() {
            let e = m.0[idx] as usize;
            let mut rest = m.0.clone();
            rest[idx] = 0;
            let mut base = Self::zero(&self.space);
            base.terms.insert(Monomial(rest), c);
            out = out.add(&base.mul(&powers[e])?)?;
        }
        out.cleanup();
        Ok(out)
    }

    /// Re-embed into `target` by mapping each variable of `self`'s space to
    /// the same `Var` in the target space.
    pub fn embed(&self, target: &Arc<VariableSpace>) -> Result<Polynomial, PolyError> {
        let map: Vec<usize> = self
            .space
            .kinds()
            .iter()
            .map(|&v| target.index_of(v).ok_or(PolyError::MissingVariable(v)))
            .collect::<Result<_, _>>()?;
        let mut out = Self::zero(target);
        for (m, c) in self.terms() {
            let mut exp = vec![0u32; target.len()];
            for (src, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    exp[map[src]] += e;
                }
            }
            out.add_term(Monomial(exp), c);
        }
        Ok(out)
    }

    /// Coefficients of `t^0, t^1, ...` as polynomials in the remaining
    /// variables of the same space (with the `t` exponent cleared).
    pub fn coefficients_in_t(&self) -> Vec<Polynomial> {
        let t_idx = match self.space.index_of(Var::T) {
            Some(i) => i,
            None => return vec![self.clone()],
        };
        let max_t = self.terms.keys().map(|m| m.0[t_idx]).max().unwrap_or(0) as usize;
        let mut out = vec![Self::zero(&self.space); max_t + 1];
        for (m, c) in self.terms() {
            let j = m.0[t_idx] as usize;
            let mut exp = m.0.clone();
            exp[t_idx] = 0;
            out[j].add_term(Monomial(exp), c);
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms() {
            if !first {
                write!(f, " {} ", if c < 0.0 { "-" } else { "+" })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let ac = c.abs();
            let mut wrote = false;
            if (ac - 1.0).abs() > 1e-15 || m.is_constant() {
                write!(f, "{ac}")?;
                wrote = true;
            }
            for (idx, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if wrote {
                    write!(f, "*")?;
                }
                write!(f, "{}", self.space.var_at(idx))?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
                wrote = true;
            }
        }
        Ok(())
    }
}

/// Number of monomials in `k` variables of total degree at most `d`.
pub fn monomial_count(k: usize, d: u32) -> usize {
    // C(k + d, d) computed without overflow at the sizes we use
    let mut acc: u128 = 1;
    for i in 1..=d as u128 {
        acc = acc * (k as u128 + i) / i;
    }
    acc as usize
}

/// All exponent vectors over the selected variables with total degree at
/// most `d`, graded-lexicographically sorted, zero vector first. Exponents
/// of unselected variables are zero.
pub fn enumerate_monomials(
    space: &VariableSpace,
    select: impl Fn(Var) -> bool,
    d: u32,
) -> Vec<Monomial> {
    fn layer(
        active: &[usize],
        pos: usize,
        remaining: u32,
        current: &mut Vec<u32>,
        out: &mut Vec<Monomial>,
    ) {
        if pos == active.len() {
            if remaining == 0 {
                out.push(Monomial(current.clone()));
            }
            return;
        }
        // descending exponent on the leading active variable reproduces
        // the within-degree ordering of `Monomial::cmp`
        for e in (0..=remaining).rev() {
            current[active[pos]] = e;
            layer(active, pos + 1, remaining - e, current, out);
            current[active[pos]] = 0;
        }
    }
    let active: Vec<usize> = (0..space.len())
        .filter(|&i| select(space.var_at(i)))
        .collect();
    let mut out = Vec::with_capacity(monomial_count(active.len(), d));
    let mut current = vec![0u32; space.len()];
    for deg in 0..=d {
        layer(&active, 0, deg, &mut current, &mut out);
    }
    out
}

/// Substitute `x -> u_i + t v_i` into a scene constraint `g(t, x)`,
/// producing a polynomial in `(t, u_i, v_i)`.
pub fn substitute_affine_path(
    g: &Polynomial,
    piece: usize,
    space_out: &Arc<VariableSpace>,
) -> Result<Polynomial, PolyError> {
    let scene_space = g.space();
    let n = scene_space.n;
    let t_out = Polynomial::variable(space_out, Var::T)?;
    let mut out = Polynomial::zero(space_out);
    // per-coordinate replacement u_{i,j} + t v_{i,j}
    let mut repl: Vec<Polynomial> = Vec::with_capacity(n);
    for j in 0..n {
        let u = Polynomial::variable(space_out, Var::U { piece, coord: j })?;
        let v = Polynomial::variable(space_out, Var::V { piece, coord: j })?;
        repl.push(u.add(&t_out.mul(&v)?)?);
    }
    for (m, c) in g.terms() {
        let mut term = Polynomial::constant(space_out, c);
        for (idx, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            match scene_space.var_at(idx) {
                Var::T => term = term.mul(&t_out.powi(e))?,
                Var::X(j) => term = term.mul(&repl[j].powi(e))?,
                other => return Err(PolyError::MissingVariable(other)),
            }
        }
        out = out.add(&term)?;
    }
    Ok(out)
}

/// Coefficients of the univariate polynomial `t -> g(t, u + t v)` for a
/// scene constraint `g(t, x)` and a fixed segment `(u, v)`.
pub fn segment_polynomial(g: &Polynomial, u: &[f64], v: &[f64]) -> Vec<f64> {
    let space = g.space();
    let n = space.n;
    debug_assert_eq!(u.len(), n);
    debug_assert_eq!(v.len(), n);
    let mut acc: Vec<f64> = vec![0.0];
    for (m, c) in g.terms() {
        // build the univariate factor product
        let mut term = vec![c];
        for (idx, &e) in m.0.iter().enumerate() {
            match space.var_at(idx) {
                Var::T => {
                    for _ in 0..e {
                        term.insert(0, 0.0);
                    }
                }
                Var::X(j) => {
                    for _ in 0..e {
                        term = univariate_mul(&term, &[u[j], v[j]]);
                    }
                }
                _ => unreachable!("scene polynomials live in (t, x)"),
            }
        }
        if acc.len() < term.len() {
            acc.resize(term.len(), 0.0);
        }
        for (k, tc) in term.iter().enumerate() {
            acc[k] += tc;
        }
    }
    while acc.len() > 1 && acc.last() == Some(&0.0) {
        acc.pop();
    }
    acc
}

fn univariate_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ca) in a.iter().enumerate() {
        for (j, &cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scene2() -> Arc<VariableSpace> {
        VariableSpace::scene(2)
    }

    #[test]
    fn monomial_counts_match_binomial() {
        for n in 1..=6usize {
            for d in 0..=8u32 {
                let space = VariableSpace::relaxation(n, 1);
                let monos = enumerate_monomials(&space, |_| true, d);
                assert_eq!(monos.len(), monomial_count(space.len(), d));
            }
        }
    }

    #[test]
    fn enumerate_small_cases() {
        // two variables, degree 2: six monomials
        let space = VariableSpace::new(2, 0, vec![Var::X(0), Var::X(1)]);
        let monos = enumerate_monomials(&space, |_| true, 2);
        assert_eq!(monos.len(), 6);
        assert!(monos[0].is_constant());
        let exps: Vec<Vec<u32>> = monos.iter().map(|m| m.0.clone()).collect();
        assert_eq!(
            exps,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );

        // univariate chain 1, t, t^2, t^3
        let ts = VariableSpace::new(0, 0, vec![Var::T]);
        let monos = enumerate_monomials(&ts, |_| true, 3);
        assert_eq!(
            monos.iter().map(|m| m.0[0]).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );

        // degree-0 basis is the constant monomial
        let s3 = VariableSpace::relaxation(3, 1);
        let monos = enumerate_monomials(&s3, |_| true, 0);
        assert_eq!(monos.len(), 1);
        assert!(monos[0].is_constant());
    }

    #[test]
    fn arithmetic_basics() {
        let sp = scene2();
        let one = Polynomial::constant(&sp, 1.0);
        let x1 = Polynomial::variable(&sp, Var::X(0)).unwrap();
        // (1 - x) + (1 + x) = 2
        let a = one.sub(&x1).unwrap();
        let b = one.add(&x1).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s, Polynomial::constant(&sp, 2.0));
        // x * x = x^2
        let sq = x1.mul(&x1).unwrap();
        assert_eq!(sq.degree(), 2);
        assert_eq!(sq.coeff(&Monomial(vec![0, 2, 0])), 1.0);
        // scale by zero annihilates
        assert!(sq.scale(0.0).is_zero());
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let a = Polynomial::constant(&VariableSpace::scene(2), 1.0);
        let b = Polynomial::constant(&VariableSpace::scene(3), 1.0);
        assert_eq!(a.add(&b).unwrap_err(), PolyError::MismatchedSpaces);
    }

    #[test]
    fn evaluate_simple() {
        let sp = scene2();
        let x1 = Polynomial::variable(&sp, Var::X(0)).unwrap();
        let p = Polynomial::constant(&sp, 1.0).sub(&x1).unwrap();
        assert_eq!(p.evaluate(&[0.0, 1.0, 0.0]).unwrap(), 0.0);

        // x1^2 x2 at (2, 3) = 12
        let q = Polynomial::from_terms(&sp, [(vec![0, 2, 1], 1.0)]).unwrap();
        assert_eq!(q.evaluate(&[0.0, 2.0, 3.0]).unwrap(), 12.0);

        let err = q.evaluate(&[1.0]).unwrap_err();
        assert!(matches!(err, PolyError::DimensionMismatch { .. }));
    }

    #[test]
    fn affine_substitution_of_linear_constraint() {
        let sp = scene2();
        let g = Polynomial::constant(&sp, 1.0)
            .sub(&Polynomial::variable(&sp, Var::X(0)).unwrap())
            .unwrap();
        let out_space = VariableSpace::piece(2, 0);
        let h = substitute_affine_path(&g, 0, &out_space).unwrap();
        // 1 - u_{1,1} - t v_{1,1}
        assert_eq!(h.num_terms(), 3);
        assert_eq!(h.degree_in(|v| matches!(v, Var::U { .. } | Var::V { .. })), 1);
        let zero_in = substitute_affine_path(&Polynomial::zero(&sp), 0, &out_space).unwrap();
        assert!(zero_in.is_zero());
    }

    #[test]
    fn substitution_commutes_with_evaluation_on_sphere() {
        // g = ||x - (c + t w)||^2 - rho^2 in n = 2
        let sp = scene2();
        let c = [0.3, -0.2];
        let w = [0.5, 0.1];
        let rho = 0.2;
        let mut g = Polynomial::constant(&sp, -rho * rho);
        for j in 0..2 {
            let xj = Polynomial::variable(&sp, Var::X(j)).unwrap();
            let center = Polynomial::from_terms(&sp, [(vec![0, 0, 0], c[j]), (vec![1, 0, 0], w[j])])
                .unwrap();
            let d = xj.sub(&center).unwrap();
            g = g.add(&d.mul(&d).unwrap()).unwrap();
        }
        let out_space = VariableSpace::piece(2, 0);
        let h = substitute_affine_path(&g, 0, &out_space).unwrap();
        assert_eq!(h.degree_in(|v| matches!(v, Var::T)), 2);
        assert_eq!(h.degree_in(|v| !matches!(v, Var::T)), 2);

        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng_state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..100 {
            let (t, u1, u2, v1, v2) = (next(), next(), next(), next(), next());
            let lhs = h.evaluate(&[t, u1, u2, v1, v2]).unwrap();
            let rhs = g.evaluate(&[t, u1 + t * v1, u2 + t * v2]).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn segment_polynomial_matches_substitution() {
        let sp = scene2();
        let g = Polynomial::from_terms(
            &sp,
            [
                (vec![0, 2, 0], 1.0),
                (vec![0, 0, 2], 1.0),
                (vec![1, 3, 0], -1.0),
                (vec![0, 0, 0], -0.25),
            ],
        )
        .unwrap();
        let u = [0.2, -0.4];
        let v = [-0.3, 0.9];
        let coeffs = segment_polynomial(&g, &u, &v);
        for k in 0..=10 {
            let t = -1.0 + 0.2 * k as f64;
            let direct = g
                .evaluate(&[t, u[0] + t * v[0], u[1] + t * v[1]])
                .unwrap();
            let horner: f64 = coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c);
            assert!((direct - horner).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }

    proptest! {
        #[test]
        fn random_eval_matches_reference(terms in proptest::collection::vec(
            (proptest::collection::vec(0u32..4, 3), -2.0f64..2.0), 1..8),
            point in proptest::collection::vec(-1.5f64..1.5, 3))
        {
            let sp = VariableSpace::scene(2);
            let p = Polynomial::from_terms(&sp, terms.clone()).unwrap();
            let fast = p.evaluate(&point).unwrap();
            // term-by-term reference evaluation over the raw input list
            let mut reference = 0.0;
            let mut collected: std::collections::HashMap<Vec<u32>, f64> = Default::default();
            for (e, c) in &terms {
                *collected.entry(e.clone()).or_insert(0.0) += c;
            }
            for (e, c) in collected {
                let mut t = c;
                for (j, &ej) in e.iter().enumerate() {
                    t *= point[j].powi(ej as i32);
                }
                reference += t;
            }
            prop_assert!((fast - reference).abs() <= 1e-12 * (1.0 + reference.abs()));
        }

        #[test]
        fn ring_distributivity(
            ta in proptest::collection::vec((proptest::collection::vec(0u32..3, 3), -2.0f64..2.0), 1..6),
            tb in proptest::collection::vec((proptest::collection::vec(0u32..3, 3), -2.0f64..2.0), 1..6),
            tc in proptest::collection::vec((proptest::collection::vec(0u32..3, 3), -2.0f64..2.0), 1..6),
        ) {
            let sp = VariableSpace::scene(2);
            let a = Polynomial::from_terms(&sp, ta).unwrap();
            let b = Polynomial::from_terms(&sp, tb).unwrap();
            let c = Polynomial::from_terms(&sp, tc).unwrap();
            let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
            let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
            let diff = lhs.sub(&rhs).unwrap();
            for (_, cdiff) in diff.terms() {
                prop_assert!(cdiff.abs() <= 1e-12);
            }
            // commutativity and degree additivity
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            if !a.is_zero() && !b.is_zero() {
                let ab = a.mul(&b).unwrap();
                if !ab.is_zero() {
                    prop_assert!(ab.degree() <= a.degree() + b.degree());
                }
            }
        }
    }
}
