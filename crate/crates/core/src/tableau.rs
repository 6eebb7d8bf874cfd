//! Embedded explicit Runge-Kutta pairs.
//!
//! Coefficients are held as exact rationals (decimal literals are exact
//! rationals too) and rounded to the working scalar on demand through
//! [`ButcherTableau::coefficients`], so one tableau serves `f32`, `f64` and
//! the extended scalar alike.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{parse_exact, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableauError {
    #[error("order conditions can only be checked for orders 1 through 4, got {0}")]
    UnsupportedOrder(u32),
    #[error("tableau `{name}`: {reason}")]
    Malformed { name: String, reason: String },
    #[error("tableau `{name}` violates {what}: residual {residual:e}")]
    Inconsistent {
        name: String,
        what: String,
        residual: f64,
    },
}

/// Coefficients of an embedded explicit Runge-Kutta pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub name: String,
    /// `a[i]` holds the `i` coefficients `a_i0 .. a_i(i-1)`.
    pub a: Vec<Vec<BigRational>>,
    /// Weights of the propagated (higher-order) solution.
    pub b: Vec<BigRational>,
    /// Weights of the embedded solution used for the error estimate.
    pub b_hat: Vec<BigRational>,
    pub c: Vec<BigRational>,
    pub order: u32,
    pub embedded_order: u32,
    pub fsal: bool,
}

/// A tableau rounded to a concrete scalar type.
#[derive(Debug, Clone)]
pub struct RkCoefficients<T> {
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
    /// `b - b_hat`, formed exactly before rounding.
    pub err: Vec<T>,
    pub c: Vec<T>,
    pub order: u32,
    pub embedded_order: u32,
    pub fsal: bool,
}

impl<T> RkCoefficients<T> {
    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

/// Which weight vector an order-condition residual refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weights {
    Main,
    Embedded,
}

/// One rooted-tree order condition evaluated on a tableau.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderResidual {
    pub weights: Weights,
    pub order: u32,
    pub label: &'static str,
    /// Left-hand side minus the required value, evaluated exactly.
    pub residual: f64,
}

impl ButcherTableau {
    /// Builds a tableau from textual coefficients (`"p/q"` or decimals).
    ///
    /// Only structural checks are applied here; consistency of the numbers is
    /// reported by [`ButcherTableau::check_invariants`].
    #[allow(clippy::too_many_arguments)]
    pub fn from_text(
        name: &str,
        a: &[&[&str]],
        b: &[&str],
        b_hat: &[&str],
        c: &[&str],
        order: u32,
        embedded_order: u32,
        fsal: bool,
    ) -> Result<Self, TableauError> {
        let malformed = |reason: String| TableauError::Malformed {
            name: name.to_string(),
            reason,
        };
        let parse_row = |row: &[&str]| -> Result<Vec<BigRational>, TableauError> {
            row.iter()
                .map(|s| parse_exact(s).map_err(|e| malformed(e.to_string())))
                .collect()
        };
        let tableau = Self {
            name: name.to_string(),
            a: a.iter().map(|row| parse_row(row)).collect::<Result<_, _>>()?,
            b: parse_row(b)?,
            b_hat: parse_row(b_hat)?,
            c: parse_row(c)?,
            order,
            embedded_order,
            fsal,
        };
        tableau.check_shape()?;
        Ok(tableau)
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    fn check_shape(&self) -> Result<(), TableauError> {
        let s = self.stages();
        let malformed = |reason: String| TableauError::Malformed {
            name: self.name.clone(),
            reason,
        };
        if s == 0 {
            return Err(malformed("no stages".into()));
        }
        if self.b_hat.len() != s || self.c.len() != s || self.a.len() != s {
            return Err(malformed(format!(
                "expected {s} entries in a, b_hat and c, got {}, {}, {}",
                self.a.len(),
                self.b_hat.len(),
                self.c.len()
            )));
        }
        // strictly lower triangular: row i has exactly i entries
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != i {
                return Err(malformed(format!(
                    "row {i} of a must hold {i} coefficients (explicit method), got {}",
                    row.len()
                )));
            }
        }
        if !(self.order > self.embedded_order && self.embedded_order >= 1) {
            return Err(malformed(format!(
                "need order > embedded_order >= 1, got {} and {}",
                self.order, self.embedded_order
            )));
        }
        Ok(())
    }

    /// Checks row-sum consistency, unit weight sums and the FSAL layout,
    /// each within `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<(), TableauError> {
        self.check_shape()?;
        let fail = |what: String, residual: f64| TableauError::Inconsistent {
            name: self.name.clone(),
            what,
            residual,
        };
        for (i, row) in self.a.iter().enumerate() {
            let sum: BigRational = row.iter().sum();
            let r = to_f64(&(sum - &self.c[i]));
            if r.abs() > tol {
                return Err(fail(format!("row sum of stage {i}"), r));
            }
        }
        for (label, w) in [("b", &self.b), ("b_hat", &self.b_hat)] {
            let sum: BigRational = w.iter().sum();
            let r = to_f64(&(sum - BigRational::one()));
            if r.abs() > tol {
                return Err(fail(format!("sum of {label}"), r));
            }
        }
        if self.fsal {
            let last = self.a.last().expect("non-empty");
            let worst = self
                .b
                .iter()
                .zip(last.iter().chain(std::iter::once(&BigRational::zero())))
                .map(|(b, a)| to_f64(&(b - a)).abs())
                .fold(0.0, f64::max);
            // the last stage must also not contribute to b
            if worst > tol || to_f64(self.b.last().expect("non-empty")).abs() > tol {
                return Err(fail("FSAL layout (b = last row of a)".into(), worst));
            }
        }
        Ok(())
    }

    /// `Σ |b_i - b̂_i|`
    pub fn embedding_gap(&self) -> f64 {
        self.b
            .iter()
            .zip(&self.b_hat)
            .map(|(b, bh)| to_f64(&(b - bh)).abs())
            .sum()
    }

    /// Rounds the coefficients to `T`.
    pub fn coefficients<T: Scalar>(&self) -> RkCoefficients<T> {
        let round = |v: &[BigRational]| v.iter().map(T::from_rational).collect::<Vec<T>>();
        let err: Vec<BigRational> = self.b.iter().zip(&self.b_hat).map(|(b, bh)| b - bh).collect();
        RkCoefficients {
            a: self.a.iter().map(|row| round(row)).collect(),
            b: round(&self.b),
            err: round(&err),
            c: round(&self.c),
            order: self.order,
            embedded_order: self.embedded_order,
            fsal: self.fsal,
        }
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(if r.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

/// Evaluates the rooted-tree order conditions through `up_to` (at most 4)
/// for `b`, and through `min(up_to, embedded_order)` for `b_hat`.
///
/// Residuals are computed in exact rational arithmetic and rounded once.
pub fn verify_order_conditions(tbl: &ButcherTableau, up_to: u32) -> Result<Vec<OrderResidual>, TableauError> {
    if !(1..=4).contains(&up_to) {
        return Err(TableauError::UnsupportedOrder(up_to));
    }
    let s = tbl.stages();
    let dot =
        |u: &[BigRational], v: &[BigRational]| -> BigRational { u.iter().zip(v).map(|(x, y)| x * y).sum() };
    // (A v)_i = Σ_j a_ij v_j
    let apply_a = |v: &[BigRational]| -> Vec<BigRational> {
        tbl.a.iter().map(|row| dot(row, &v[..row.len()])).collect()
    };
    let ones = vec![BigRational::one(); s];
    let c = &tbl.c;
    let c2: Vec<BigRational> = c.iter().map(|x| x * x).collect();
    let c3: Vec<BigRational> = c2.iter().zip(c).map(|(x, y)| x * y).collect();
    let ac = apply_a(c);
    let ac2 = apply_a(&c2);
    let aac = apply_a(&ac);
    let cac: Vec<BigRational> = c.iter().zip(&ac).map(|(x, y)| x * y).collect();

    let frac = |p: i64, q: i64| BigRational::new(p.into(), q.into());
    let conditions: [(u32, &'static str, &[BigRational], BigRational); 8] = [
        (1, "sum b_i = 1", &ones, frac(1, 1)),
        (2, "sum b_i c_i = 1/2", c, frac(1, 2)),
        (3, "sum b_i c_i^2 = 1/3", &c2, frac(1, 3)),
        (3, "sum b_i a_ij c_j = 1/6", &ac, frac(1, 6)),
        (4, "sum b_i c_i^3 = 1/4", &c3, frac(1, 4)),
        (4, "sum b_i c_i a_ij c_j = 1/8", &cac, frac(1, 8)),
        (4, "sum b_i a_ij c_j^2 = 1/12", &ac2, frac(1, 12)),
        (4, "sum b_i a_ij a_jk c_k = 1/24", &aac, frac(1, 24)),
    ];

    let mut out = Vec::new();
    for (weights, w, max_order) in [
        (Weights::Main, &tbl.b, up_to.min(tbl.order)),
        (Weights::Embedded, &tbl.b_hat, up_to.min(tbl.embedded_order)),
    ] {
        for (order, label, v, target) in &conditions {
            if *order <= max_order {
                out.push(OrderResidual {
                    weights,
                    order: *order,
                    label,
                    residual: to_f64(&(dot(w, v) - target)),
                });
            }
        }
    }
    Ok(out)
}

/// The shipped integration methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tsit5,
    Dp5,
    Vern6,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Tsit5, Method::Dp5, Method::Vern6];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Tsit5 => "tsit5",
            Method::Dp5 => "dp5",
            Method::Vern6 => "vern6",
        }
    }

    pub fn tableau(self) -> ButcherTableau {
        match self {
            Method::Tsit5 => tableau_tsit5(),
            Method::Dp5 => tableau_dp5(),
            Method::Vern6 => tableau_vern6(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected tsit5, dp5, vern6)"))
    }
}

/// Tsitouras' 7-stage FSAL 5(4) pair.
///
/// The published coefficients are decimal; they satisfy the order conditions
/// to roughly 1e-16.
pub fn tableau_tsit5() -> ButcherTableau {
    let a: [&[&str]; 7] = [
        &[],
        &["0.161"],
        &["-0.008480655492356989", "0.335480655492357"],
        &["2.897153057105493", "-6.359448489975075", "4.3622954328695815"],
        &[
            "5.325864828439257",
            "-11.748883564062828",
            "7.4955393428898365",
            "-0.09249506636175525",
        ],
        &[
            "5.86145544294642",
            "-12.92096931784711",
            "8.159367898576159",
            "-0.071584973281401",
            "-0.028269050394068383",
        ],
        &[
            "0.09646076681806523",
            "0.01",
            "0.4798896504144996",
            "1.379008574103742",
            "-3.290069515436081",
            "2.324710524099774",
        ],
    ];
    let b = [
        "0.09646076681806523",
        "0.01",
        "0.4798896504144996",
        "1.379008574103742",
        "-3.290069515436081",
        "2.324710524099774",
        "0",
    ];
    // b̂ = b - d with d the published error weights (Σ d = 0)
    let d = [
        "0.00178001105222577714",
        "0.0008164344596567469",
        "-0.007880878010261995",
        "0.1447110071732629",
        "-0.5823571654525552",
        "0.45808210592918697",
        "-1/66",
    ];
    let b_hat: Vec<String> = b
        .iter()
        .zip(d)
        .map(|(bi, di)| {
            let v = parse_exact(bi).expect("literal") - parse_exact(di).expect("literal");
            format!("{}/{}", v.numer(), v.denom())
        })
        .collect();
    let b_hat: Vec<&str> = b_hat.iter().map(String::as_str).collect();
    let c = ["0", "0.161", "0.327", "0.9", "0.9800255409045097", "1", "1"];
    ButcherTableau::from_text("tsit5", &a, &b, &b_hat, &c, 5, 4, true).expect("static tableau")
}

/// Dormand and Prince's 7-stage FSAL 5(4) pair (the `ode45` method).
pub fn tableau_dp5() -> ButcherTableau {
    let a: [&[&str]; 7] = [
        &[],
        &["1/5"],
        &["3/40", "9/40"],
        &["44/45", "-56/15", "32/9"],
        &["19372/6561", "-25360/2187", "64448/6561", "-212/729"],
        &["9017/3168", "-355/33", "46732/5247", "49/176", "-5103/18656"],
        &["35/384", "0", "500/1113", "125/192", "-2187/6784", "11/84"],
    ];
    let b = ["35/384", "0", "500/1113", "125/192", "-2187/6784", "11/84", "0"];
    let b_hat = [
        "5179/57600",
        "0",
        "7571/16695",
        "393/640",
        "-92097/339200",
        "187/2100",
        "1/40",
    ];
    let c = ["0", "1/5", "3/10", "4/5", "8/9", "1", "1"];
    ButcherTableau::from_text("dp5", &a, &b, &b_hat, &c, 5, 4, true).expect("static tableau")
}

/// Verner's "most efficient" 9-stage 6(5) pair.
///
/// `a`, `b` and `c` are exact; the embedded weights are the 17-digit decimals
/// Verner publishes.
pub fn tableau_vern6() -> ButcherTableau {
    let a: [&[&str]; 9] = [
        &[],
        &["3/50"],
        &["519479/27000000", "2070721/27000000"],
        &["1439/40000", "0", "4317/40000"],
        &[
            "109225017611/82828840000",
            "0",
            "-417627820623/82828840000",
            "43699198143/10353605000",
        ],
        &[
            "-8036815292643907349452552172369/191934985946683241245914401600",
            "0",
            "246134619571490020064824665/1543816496655405117602368",
            "-13880495956885686234074067279/113663489566254201783474344",
            "755005057777788994734129/136485922925633667082436",
        ],
        &[
            "-1663299841566102097180506666498880934230261/30558424506156170307020957791311384232000",
            "0",
            "130838124195285491799043628811093033/631862949514135618861563657970240",
            "-3287100453856023634160618787153901962873/20724314915376755629135711026851409200",
            "2771826790140332140865242520369241/396438716042723436917079980147600",
            "-1799166916139193/96743806114007800",
        ],
        &[
            "-832144750039369683895428386437986853923637763/15222974550069600748763651844667619945204887",
            "0",
            "818622075710363565982285196611368750/3936576237903728151856072395343129",
            "-9818985165491658464841194581385463434793741875/61642597962658994069869370923196463581866011",
            "31796692141848558720425711042548134769375/4530254033500045975557858016006308628092",
            "-14064542118843830075/766928748264306853644",
            "-1424670304836288125/2782839104764768088217",
        ],
        &[
            "382735282417/11129397249634",
            "0",
            "0",
            "5535620703125000/21434089949505429",
            "13867056347656250/32943296570459319",
            "626271188750/142160006043",
            "-51160788125000/289890548217",
            "163193540017/946795234",
        ],
    ];
    let b = [
        "382735282417/11129397249634",
        "0",
        "0",
        "5535620703125000/21434089949505429",
        "13867056347656250/32943296570459319",
        "626271188750/142160006043",
        "-51160788125000/289890548217",
        "163193540017/946795234",
        "0",
    ];
    let b_hat = [
        "0.04909967648382489",
        "0",
        "0",
        "0.22511122295165242",
        "0.4694682253029562",
        "0.8065792249988868",
        "0",
        "-0.607119489177796",
        "0.056861139440475696",
    ];
    let c = [
        "0",
        "3/50",
        "1439/15000",
        "1439/10000",
        "4973/10000",
        "389/400",
        "1999/2000",
        "1",
        "1",
    ];
    ButcherTableau::from_text("vern6", &a, &b, &b_hat, &c, 6, 5, true).expect("static tableau")
}
