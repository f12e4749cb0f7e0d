//! JSON state files and report serialization.
//!
//! Floats are written with 17 significant digits so every `f64` survives a
//! write/parse cycle bit for bit.

use std::io;

use num_complex::Complex;
use num_rational::Rational64;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;
use crate::states::{QuditDensity, SymDensity};
use crate::symbasis::{BasisIndex, OccupationVector};

/// One stored matrix element `λ_{m,mp}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryRecord {
    pub m: Vec<usize>,
    pub mp: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// On-disk symmetric density: the upper triangle plus diagonal, in basis
/// rank order. Omitted entries are zero; the lower triangle is implied by
/// Hermiticity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub d: usize,
    #[serde(rename = "M")]
    pub total: usize,
    pub entries: Vec<EntryRecord>,
}

impl StateFile {
    pub fn from_density<T: Real>(rho: &SymDensity<T>) -> Self {
        let basis = rho.basis();
        let lam = rho.matrix();
        let mut entries = Vec::new();
        for (i, m) in basis.iter() {
            for (j, mp) in basis.iter().skip(i) {
                let z = lam[(i, j)];
                if z.re == T::zero() && z.im == T::zero() {
                    continue;
                }
                entries.push(EntryRecord {
                    m: m.counts().to_vec(),
                    mp: mp.counts().to_vec(),
                    re: z.re.as_f64(),
                    im: z.im.as_f64(),
                });
            }
        }
        StateFile {
            d: rho.d(),
            total: rho.total(),
            entries,
        }
    }

    /// Rebuilds the full Hermitian matrix. Lower-triangle records are
    /// accepted and conjugated; a position given twice is rejected.
    pub fn to_density<T: Real>(&self) -> Result<SymDensity<T>> {
        let basis = BasisIndex::new(self.d, self.total).map_err(|e| Error::Parse(e.to_string()))?;
        let n = basis.size();
        let mut lam = CMatrix::zeros(n, n);
        let mut seen = vec![false; n * n];
        let lookup = |counts: &[usize], field: &str| -> Result<usize> {
            let v = OccupationVector::new(counts.to_vec()).map_err(|e| Error::Parse(e.to_string()))?;
            basis.rank_of(&v).map_err(|_| {
                Error::Parse(format!(
                    "entry {field} = {counts:?} is not an occupation vector for d = {}, M = {}",
                    self.d, self.total
                ))
            })
        };
        for e in &self.entries {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::Parse("non-finite matrix entry".into()));
            }
            let (mut i, mut j) = (lookup(&e.m, "m")?, lookup(&e.mp, "mp")?);
            let mut z = Complex::new(T::lit(e.re), T::lit(e.im));
            if i > j {
                std::mem::swap(&mut i, &mut j);
                z = z.conj();
            }
            if std::mem::replace(&mut seen[i * n + j], true) {
                return Err(Error::Parse(format!("entry ({:?}, {:?}) given twice", e.m, e.mp)));
            }
            if i == j && e.im != 0.0 {
                return Err(Error::Parse(format!("diagonal entry {:?} has imaginary part {}", e.m, e.im)));
            }
            lam[(i, j)] = z;
            if i != j {
                lam[(j, i)] = z.conj();
            }
        }
        SymDensity::from_matrix(self.d, self.total, lam)
    }
}

pub fn parse_state_file(text: &str) -> Result<StateFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Complex matrix as nested `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixRecord(pub Vec<Vec<[f64; 2]>>);

impl MatrixRecord {
    pub fn from_matrix<T: Real>(m: &CMatrix<T>) -> Self {
        MatrixRecord(
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re.as_f64(), m[(i, j)].im.as_f64()]).collect())
                .collect(),
        )
    }

    pub fn from_qudit<T: Real>(sigma: &QuditDensity<T>) -> Self {
        Self::from_matrix(sigma.matrix())
    }
}

/// Serializes a rational as `"p/q"`.
pub fn ser_rational<S: Serializer>(q: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(q))
}

pub fn ser_opt_rational<S: Serializer>(q: &Option<Rational64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_some(&format_rational(q)),
        None => s.serialize_none(),
    }
}

pub fn format_rational(q: &Rational64) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// `f64` with 17 significant digits, positional for moderate exponents.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..=16).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}.0", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    format!("{sign}{body}")
}

/// Pretty JSON formatter that writes floats via [`format_f64`].
struct Sig17Formatter<'a> {
    inner: PrettyFormatter<'a>,
}

macro_rules! delegate {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
                self.inner.$name(w)
            }
        )*
    };
}

impl Formatter for Sig17Formatter<'_> {
    delegate!(begin_array, end_array, begin_object, end_object, end_array_value, begin_object_value, end_object_value);

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        w.write_all(format_f64(f64::from(value)).as_bytes())
    }
}

/// Pretty-printed JSON with 17-significant-digit floats.
pub fn to_json_string<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = Sig17Formatter {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}
