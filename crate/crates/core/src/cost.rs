//! Analytical query-cost predictors: the average-case recurrence and its
//! closed form in exact rational arithmetic, worst-case and exponential
//! bounds, the point-interface cost bound, and the adversarial two-tuple
//! instance behind the single-ended lower bound.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AttributeSchema, Dataset, InterfaceClass, SkylineSet, Tuple};
use crate::pq::{choose_plane_attrs, pq2d_cost_formula};

/// Expected query cost of single-ended discovery under the
/// random-among-skyline ranking, as an exact rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedCost {
    pub s: u64,
    pub m: u64,
    pub value: BigRational,
}

/// E(C_s) = 1 + (m/s) * sum_{i=0}^{s-1} E(C_i), with E(C_0) = 1.
pub fn expected_cost_recurrence(s: u64, m: u64) -> Result<BigRational> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let m_rat = BigRational::from_integer(BigInt::from(m));
    let mut sum = BigRational::one(); // E(C_0)
    let mut last = BigRational::one();
    for i in 1..=s {
        last = BigRational::one() + &m_rat * &sum / BigRational::from_integer(BigInt::from(i));
        sum += &last;
    }
    Ok(last)
}

fn factorial(n: u64) -> BigUint {
    let mut out = BigUint::one();
    for i in 2..=n {
        out *= BigUint::from(i);
    }
    out
}

/// Closed form of the recurrence:
/// E(C_s) = (m * (m+s-1)! - (m-1)! * s!) / ((m-1) * (m-1)! * s!).
/// Singular at m = 1, where only the recurrence is defined. Equals
/// `expected_cost_recurrence` exactly.
pub fn expected_cost_closed(s: u64, m: u64) -> Result<BigRational> {
    if m < 2 {
        return Err(Error::InvalidParameter(
            "the closed form is singular at m = 1; use the recurrence".into(),
        ));
    }
    if s == 0 {
        return Ok(BigRational::one());
    }
    let num = BigInt::from(m) * BigInt::from(factorial(m + s - 1))
        - BigInt::from(factorial(m - 1)) * BigInt::from(factorial(s));
    let den = BigInt::from(m - 1) * BigInt::from(factorial(m - 1)) * BigInt::from(factorial(s));
    Ok(BigRational::new(num, den))
}

/// Nominal worst-case and average-case bounds for the range-interface
/// algorithms.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// m * s^(m+1), the single-ended tree's nominal node ceiling.
    pub sq_worst: BigUint,
    /// m * min(s^(m+1), n) for the mutually exclusive variant.
    pub rq_worst: BigUint,
    /// C(s+m, m), the majorant of the average-case cost.
    pub binom_bound: BigUint,
    /// (e + e*s/m)^m, rounded up.
    pub exp_bound: f64,
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut out = BigUint::one();
    for i in 0..k {
        out = out * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    out
}

pub fn cost_bounds(s: u64, m: u64, n: u64) -> Result<BoundReport> {
    if s == 0 || m == 0 || n < s {
        return Err(Error::InvalidParameter(
            "cost_bounds needs s >= 1, m >= 1, n >= s".into(),
        ));
    }
    let pow = BigUint::from(s).pow((m + 1) as u32);
    let sq_worst = BigUint::from(m) * &pow;
    let rq_worst = BigUint::from(m) * pow.min(BigUint::from(n));
    let binom_bound = binomial(s + m, m);
    let e = std::f64::consts::E;
    // rounded up by a relative guard so the binomial comparison is safe
    let exp_bound = (e + e * s as f64 / m as f64).powi(m as i32) * (1.0 + 1e-9);
    Ok(BoundReport {
        sq_worst,
        rq_worst,
        binom_bound,
        exp_bound,
    })
}

/// Upper bound on the point-interface driver's 1D query count: the per-gap
/// min sum of every plane's skyline list, extended by the corner points,
/// summed over all value combinations of the non-plane attributes.
pub fn pqdb_cost_bound(d: &Dataset, skyline: &SkylineSet) -> Result<u64> {
    let schema = d.schema();
    let (x_attr, y_attr) = choose_plane_attrs(schema)?;
    let non_plane: Vec<usize> = d
        .ranking_attrs()
        .into_iter()
        .filter(|&a| a != x_attr && a != y_attr)
        .collect();
    let x_max = schema[x_attr].domain_size - 1;
    let y_max = schema[y_attr].domain_size - 1;
    let combos: u64 = non_plane
        .iter()
        .map(|&a| schema[a].domain_size as u64)
        .product();
    if combos > 10_000_000 {
        return Err(Error::InvalidParameter(
            "non-plane value combinations exceed the supported range".into(),
        ));
    }
    // group the skyline staircase of each plane
    let mut per_combo: std::collections::HashMap<Vec<u32>, Vec<(u32, u32)>> =
        std::collections::HashMap::new();
    for &id in skyline.members() {
        let t = d
            .tuple(id)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown skyline id {id}")))?;
        let key: Vec<u32> = non_plane.iter().map(|&a| t.values[a]).collect();
        per_combo
            .entry(key)
            .or_default()
            .push((t.values[x_attr], t.values[y_attr]));
    }
    let mut total = 0u64;
    let empty_term = pq2d_cost_formula(&[], x_max, y_max)?;
    total += empty_term * (combos - per_combo.len() as u64);
    for pts in per_combo.values_mut() {
        pts.sort_unstable();
        total += pq2d_cost_formula(pts, x_max, y_max)?;
    }
    Ok(total)
}

/// The two-tuple construction behind the single-ended lower bound, mapped
/// onto a 3-value normalized grid: t1 best only on the first attribute,
/// t2 best everywhere else. Both are on the skyline.
pub fn adversarial_sq_instance(m: usize) -> Result<Dataset> {
    if m < 2 {
        return Err(Error::InvalidParameter("the construction needs m >= 2".into()));
    }
    let schema: Vec<AttributeSchema> = (0..m)
        .map(|i| AttributeSchema::ranking(&format!("a{i}"), 3, InterfaceClass::Sq))
        .collect();
    let mut v1 = vec![1u32; m];
    v1[0] = 0;
    let mut v2 = vec![0u32; m];
    v2[0] = 1;
    Dataset::new(schema, vec![Tuple::new(1, v1), Tuple::new(2, v2)])
}

/// Convenience: compare an exact rational against an integer bound.
pub fn rational_le_biguint(value: &BigRational, bound: &BigUint) -> bool {
    if value.is_negative() {
        return true;
    }
    let bound_rat = BigRational::from_integer(BigInt::from(bound.clone()));
    *value <= bound_rat
}

/// Rows for the analytical sweep the `analyze` subcommand emits.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisRow {
    pub s: u64,
    pub m: u64,
    pub expected: f64,
    pub expected_exact: String,
    pub binom_bound: String,
    pub exp_bound: f64,
}

pub fn analysis_rows(s_values: &[u64], m_values: &[u64]) -> Result<Vec<AnalysisRow>> {
    let mut rows = Vec::new();
    for &m in m_values {
        for &s in s_values {
            let expected = expected_cost_recurrence(s, m)?;
            let bounds = cost_bounds(s.max(1), m, u64::MAX >> 1)?;
            rows.push(AnalysisRow {
                s,
                m,
                expected: expected.to_f64().unwrap_or(f64::NAN),
                expected_exact: expected.to_string(),
                binom_bound: bounds.binom_bound.to_string(),
                exp_bound: bounds.exp_bound,
            });
        }
    }
    Ok(rows)
}
