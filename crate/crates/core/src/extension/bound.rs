use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::syntax::{Atom, Program, Term};

/// Largest result, in bits, that is expanded to an exact integer.
const EXACT_BITS: u64 = 1 << 16;

/// A natural number that is either written out or kept as a tower of powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BigValue {
    Exact(BigUint),
    Power {
        base: Box<BigValue>,
        exponent: Box<BigValue>,
    },
}

impl BigValue {
    pub fn exact(n: impl Into<BigUint>) -> BigValue {
        BigValue::Exact(n.into())
    }

    pub fn as_exact(&self) -> Option<&BigUint> {
        match self {
            BigValue::Exact(n) => Some(n),
            BigValue::Power { .. } => None,
        }
    }

    /// `base^exponent`, expanded when the result stays below a size threshold.
    pub fn pow(base: BigValue, exponent: BigValue) -> BigValue {
        if let (BigValue::Exact(b), BigValue::Exact(e)) = (&base, &exponent) {
            if e.is_zero() || b.is_one() {
                return BigValue::Exact(BigUint::one());
            }
            if b.is_zero() {
                return BigValue::Exact(BigUint::zero());
            }
            if let Some(e64) = e.to_u64() {
                if b.bits().saturating_mul(e64) <= EXACT_BITS {
                    let e32 = u32::try_from(e64).expect("bounded by EXACT_BITS");
                    return BigValue::Exact(b.pow(e32));
                }
            }
        }
        BigValue::Power {
            base: Box::new(base),
            exponent: Box::new(exponent),
        }
    }
}

impl fmt::Display for BigValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BigValue::Exact(n) => write!(f, "{n}"),
            BigValue::Power { base, exponent } => {
                let wrap = |v: &BigValue| match v {
                    BigValue::Exact(n) => n.to_string(),
                    other => format!("({other})"),
                };
                write!(f, "{}^{}", wrap(base), wrap(exponent))
            }
        }
    }
}

impl Serialize for BigValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Bell numbers by `BELL(n+1) = Σ_k C(n, k)·BELL(k)`, with `BELL(0) = 1`.
pub fn bell(n: usize) -> BigUint {
    let mut bells: Vec<BigUint> = vec![BigUint::one()];
    for m in 0..n {
        let mut binom = BigUint::one();
        let mut sum = BigUint::zero();
        for (k, b) in bells.iter().enumerate() {
            sum += &binom * b;
            binom = binom * BigUint::from(m - k) / BigUint::from(k + 1);
        }
        bells.push(sum);
    }
    bells.swap_remove(n)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub maxb: usize,
    pub maxa: usize,
    pub n_constants: usize,
    pub sigma0_size: usize,
    pub schema_size: usize,
    #[serde(serialize_with = "as_string")]
    pub d: BigUint,
    pub bound: BigValue,
}

fn as_string<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(n)
}

/// The iteration bound `maxb^d` with `d = |Σ⁰| · |schema| · BELL(maxa + consts)`.
pub fn bound_b(p: &Program) -> BoundReport {
    let maxb = p.max_body();
    let maxa = p.max_arity();
    let n_constants = p.constants().len();
    let sigma0_size = super::sigma0(p).len();
    let schema_size = p.schema.len();
    let d = BigUint::from(sigma0_size) * BigUint::from(schema_size) * bell(maxa + n_constants);
    let bound = BigValue::pow(BigValue::exact(maxb), BigValue::Exact(d.clone()));
    BoundReport {
        maxb,
        maxa,
        n_constants,
        sigma0_size,
        schema_size,
        d,
        bound,
    }
}

/// Atoms related by a position-wise bijection that fixes constants and the
/// variables the two atoms share.
pub fn type_equivalent(a1: &Atom, a2: &Atom) -> bool {
    if a1.predicate != a2.predicate || a1.arity() != a2.arity() {
        return false;
    }
    let shared: Vec<_> = a1.var_set().intersection(&a2.var_set()).cloned().collect();
    let mut fwd: BTreeMap<&Term, &Term> = BTreeMap::new();
    let mut bwd: BTreeMap<&Term, &Term> = BTreeMap::new();
    for (s, t) in a1.args.iter().zip(&a2.args) {
        let fixed = |x: &Term| match x {
            Term::Var(v) => shared.contains(v),
            _ => true,
        };
        if (fixed(s) || fixed(t)) && s != t {
            return false;
        }
        if fwd.insert(s, t).is_some_and(|prev| prev != t) {
            return false;
        }
        if bwd.insert(t, s).is_some_and(|prev| prev != s) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_atoms, parse_program};

    fn a(s: &str) -> Atom {
        parse_atoms(s).unwrap().remove(0)
    }

    #[test]
    fn bell_values() {
        let expected = [1u32, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (n, e) in expected.iter().enumerate() {
            assert_eq!(bell(n), BigUint::from(*e), "BELL({n})");
        }
    }

    #[test]
    fn single_atom_bodies_bound_to_one() {
        let p = parse_program("t(X, Y) -> exists Z: t(Y, Z).").unwrap();
        let r = bound_b(&p);
        assert_eq!(r.maxb, 1);
        assert_eq!(r.bound, BigValue::exact(1u32));
        assert_eq!(r.d, BigUint::from(2u32));
    }

    #[test]
    fn huge_powers_stay_symbolic() {
        let v = BigValue::pow(BigValue::exact(2u32), BigValue::exact(1_000_000u32));
        assert_eq!(v.to_string(), "2^1000000");
        let small = BigValue::pow(BigValue::exact(3u32), BigValue::exact(4u32));
        assert_eq!(small, BigValue::exact(81u32));
    }

    #[test]
    fn type_equivalence_examples() {
        assert!(type_equivalent(&a("t(X, c, Y)"), &a("t(X, c, Y)")));
        assert!(!type_equivalent(&a("t(c1, Y)"), &a("t(c2, Y)")));
        assert!(type_equivalent(&a("t(X, Y)"), &a("t(X, W)")));
        assert!(!type_equivalent(&a("t(X, Y)"), &a("t(Y, X)")));
        assert!(!type_equivalent(&a("t(X, X)"), &a("t(X, W)")));
        assert!(!type_equivalent(&a("t(V, W)"), &a("t(X, X)")));
        assert!(type_equivalent(&a("t(V, W)"), &a("t(X, Y)")));
    }
}
