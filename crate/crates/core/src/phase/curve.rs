use std::fmt;
use std::str::FromStr;

use super::{dc1_distance, CircleMap, ModelParams, SineTerm};
use crate::error::{QdsError, Result};

/// Generalized polynomial `Σ c_i t^{p_i}` with nonnegative real powers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<(f64, f64)>,
}

impl Polynomial {
    pub fn new(terms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let terms: Vec<(f64, f64)> = terms.into_iter().collect();
        for &(c, p) in &terms {
            if !c.is_finite() || !p.is_finite() || p < 0.0 {
                return Err(QdsError::InvalidCurve(format!("bad polynomial term {c}*t^{p}")));
            }
        }
        Ok(Self { terms })
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: vec![(c, 0.0)] }
    }

    pub fn linear(c0: f64, c1: f64) -> Self {
        Self {
            terms: vec![(c0, 0.0), (c1, 1.0)],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, p)| if p == 0.0 { c } else { c * t.powf(p) })
            .sum()
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|&(c, _)| c == 0.0)
    }
}

impl FromStr for Polynomial {
    type Err = QdsError;

    /// Parses expressions such as `0.1*t`, `-0.08 + 0.1 t`, `0.1*t^0.8`, `t^2 - 0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let err = |msg: &str| QdsError::InvalidCurve(format!("cannot parse '{s}': {msg}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err("empty expression"));
        }
        let mut terms = Vec::new();
        let bytes = compact.as_bytes();
        let mut start = 0;
        // split at + / - that are not exponent signs
        let mut pieces = Vec::new();
        for i in 1..bytes.len() {
            let c = bytes[i];
            let prev = bytes[i - 1];
            if (c == b'+' || c == b'-') && prev != b'e' && prev != b'E' && prev != b'^' {
                pieces.push(&compact[start..i]);
                start = i;
            }
        }
        pieces.push(&compact[start..]);
        for piece in pieces {
            let (sign, body) = match piece.as_bytes().first() {
                Some(b'+') => (1.0, &piece[1..]),
                Some(b'-') => (-1.0, &piece[1..]),
                _ => (1.0, piece),
            };
            if body.is_empty() {
                return Err(err("dangling sign"));
            }
            let (coef, power) = match body.find('t') {
                None => (body.parse::<f64>().map_err(|_| err("bad number"))?, 0.0),
                Some(pos) => {
                    let head = body[..pos].trim_end_matches('*');
                    let coef = if head.is_empty() {
                        1.0
                    } else {
                        head.parse::<f64>().map_err(|_| err("bad coefficient"))?
                    };
                    let tail = &body[pos + 1..];
                    let power = if tail.is_empty() {
                        1.0
                    } else if let Some(p) = tail.strip_prefix('^') {
                        p.parse::<f64>().map_err(|_| err("bad exponent"))?
                    } else {
                        return Err(err("unexpected text after t"));
                    };
                    (coef, power)
                }
            };
            terms.push((sign * coef, power));
        }
        Polynomial::new(terms)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, &(c, p)) in self.terms.iter().enumerate() {
            let sep = if i == 0 {
                if c < 0.0 {
                    "-"
                } else {
                    ""
                }
            } else if c < 0.0 {
                " - "
            } else {
                " + "
            };
            write!(f, "{sep}{:?}", c.abs())?;
            if p == 1.0 {
                write!(f, "*t")?;
            } else if p != 0.0 {
                write!(f, "*t^{p:?}")?;
            }
        }
        Ok(())
    }
}

/// One continuous stretch `[start, end)` of a curve; each sine frequency
/// carries an amplitude path in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePiece {
    pub start: f64,
    pub end: f64,
    pub amplitudes: Vec<(u32, Polynomial)>,
}

impl CurvePiece {
    fn map_at(&self, degree: u32, t: f64) -> Result<CircleMap> {
        CircleMap::new(
            degree,
            self.amplitudes.iter().map(|(freq, poly)| SineTerm {
                freq: *freq,
                amp: poly.eval(t),
            }),
        )
    }
}

/// A piecewise-Hölder curve of maps on `[0, 1]`, right-continuous at jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct MapCurve {
    degree: u32,
    pieces: Vec<CurvePiece>,
    holder_exponent: f64,
    params: ModelParams,
}

/// Parameter samples per piece used to certify the model bounds along the curve.
const BOUND_SAMPLES: usize = 65;

impl MapCurve {
    /// `jumps` are the interior break points; `amplitudes[i]` describes piece `i`.
    pub fn new(
        degree: u32,
        jumps: &[f64],
        amplitudes: Vec<Vec<(u32, Polynomial)>>,
        holder_exponent: f64,
        params: ModelParams,
    ) -> Result<Self> {
        if !(holder_exponent > 0.0 && holder_exponent <= 1.0) {
            return Err(QdsError::InvalidCurve(format!(
                "Hölder exponent must lie in (0, 1], got {holder_exponent}"
            )));
        }
        if amplitudes.len() != jumps.len() + 1 {
            return Err(QdsError::InvalidCurve(format!(
                "{} jump points need {} pieces, got {}",
                jumps.len(),
                jumps.len() + 1,
                amplitudes.len()
            )));
        }
        let mut bounds = Vec::with_capacity(jumps.len() + 2);
        bounds.push(0.0);
        for &j in jumps {
            if !(j > *bounds.last().unwrap() && j < 1.0) {
                return Err(QdsError::InvalidCurve(format!(
                    "jump points must be strictly increasing inside (0, 1), got {jumps:?}"
                )));
            }
            bounds.push(j);
        }
        bounds.push(1.0);
        let pieces: Vec<CurvePiece> = amplitudes
            .into_iter()
            .enumerate()
            .map(|(i, amplitudes)| CurvePiece {
                start: bounds[i],
                end: bounds[i + 1],
                amplitudes,
            })
            .collect();
        let curve = Self {
            degree,
            pieces,
            holder_exponent,
            params,
        };
        for piece in &curve.pieces {
            for s in 0..BOUND_SAMPLES {
                let t = piece.start + (piece.end - piece.start) * s as f64 / (BOUND_SAMPLES - 1) as f64;
                piece
                    .map_at(degree, t)?
                    .check(&params)
                    .map_err(|e| QdsError::InvalidCurve(format!("at t = {t}: {e}")))?;
            }
        }
        Ok(curve)
    }

    /// Single-piece curve with amplitude path `eps(t)` on frequency 1.
    pub fn single_frequency(eps: Polynomial, holder_exponent: f64, params: ModelParams) -> Result<Self> {
        Self::new(2, &[], vec![vec![(1, eps)]], holder_exponent, params)
    }

    /// The constant curve at the doubling map.
    pub fn doubling() -> Self {
        Self::new(2, &[], vec![vec![]], 1.0, ModelParams::default()).expect("doubling is admissible")
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn pieces(&self) -> &[CurvePiece] {
        &self.pieces
    }

    pub fn holder_exponent(&self) -> f64 {
        self.holder_exponent
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn jump_points(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.start).collect()
    }

    /// Index of the piece containing `t` (right-continuous; `t = 1` is in the last piece).
    pub fn piece_index(&self, t: f64) -> usize {
        self.pieces.iter().rposition(|p| t >= p.start).unwrap_or(0)
    }

    /// `γ_t`, taking right limits at jump points.
    pub fn at(&self, t: f64) -> CircleMap {
        let t = t.clamp(0.0, 1.0);
        self.pieces[self.piece_index(t)]
            .map_at(self.degree, t)
            .expect("validated curve")
    }

    /// Left limit `γ_{t−}`; equals `γ_t` away from jump points.
    pub fn left_limit(&self, t: f64) -> CircleMap {
        let t = t.clamp(0.0, 1.0);
        let idx = self
            .pieces
            .iter()
            .position(|p| t <= p.end)
            .unwrap_or(self.pieces.len() - 1);
        self.pieces[idx].map_at(self.degree, t).expect("validated curve")
    }

    pub fn is_constant_doubling(&self) -> bool {
        self.degree == 2
            && self
                .pieces
                .iter()
                .all(|p| p.amplitudes.iter().all(|(_, poly)| poly.is_zero()))
    }
}

/// Largest sampled ratio `d_C¹(γ_t, γ_s) / |t − s|^η` over pairs in a common piece.
/// The pairs are deterministic: a mix of nested dyadic spacings.
pub fn holder_constant(curve: &MapCurve, sample_pairs: usize) -> f64 {
    let eta = curve.holder_exponent();
    let mut best: f64 = 0.0;
    let mut count = 0;
    let mut level = 1;
    'outer: while count < sample_pairs.max(1) {
        let h = 0.5f64.powi(level);
        for piece in curve.pieces() {
            let len = piece.end - piece.start;
            let steps = (1.0 / h).round() as usize;
            for i in 0..steps {
                let s = piece.start + len * (i as f64 * h);
                let t = s + len * h * 0.999;
                let d = dc1_distance(&curve.at(s), &curve.at(t));
                best = best.max(d / (t - s).powf(eta));
                count += 1;
                if count >= sample_pairs {
                    break 'outer;
                }
            }
        }
        level += 1;
        if level > 30 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn parses_polynomials() {
        let cases = [
            ("0.1*t", 0.5, 0.05),
            ("-0.08 + 0.1 t", 1.0, 0.02),
            ("0.1*t^0.8", 1.0, 0.1),
            ("t^2 - 0.5", 2.0, 3.5),
            ("1e-2*t", 1.0, 0.01),
            ("0", 0.3, 0.0),
        ];
        for (src, t, want) in cases {
            let p: Polynomial = src.parse().unwrap();
            assert!((p.eval(t) - want).abs() < 1e-15, "{src}");
            let again: Polynomial = p.to_string().parse().unwrap();
            assert_eq!(again, p, "{src}");
        }
        for bad in ["", "0.1*x", "t^", "0.1**t^-1", "+"] {
            assert!(bad.parse::<Polynomial>().is_err(), "{bad}");
        }
    }

    #[test]
    fn jumps_are_right_continuous() {
        let curve = MapCurve::new(
            2,
            &[0.5],
            vec![
                vec![(1, "0.1*t".parse().unwrap())],
                vec![(1, "-0.08 + 0.1*t".parse().unwrap())],
            ],
            1.0,
            ModelParams::default(),
        )
        .unwrap();
        assert_eq!(curve.at(0.5).terms()[0].amp, -0.08 + 0.05);
        assert_eq!(curve.left_limit(0.5).terms()[0].amp, 0.05);
        assert_eq!(curve.piece_index(1.0), 1);
        assert_eq!(curve.jump_points(), vec![0.5]);
    }

    #[test]
    fn rejects_out_of_class_curves() {
        let r = MapCurve::single_frequency("0.5*t".parse().unwrap(), 1.0, ModelParams::default());
        assert!(matches!(r, Err(QdsError::InvalidCurve(_))));
        let r = MapCurve::single_frequency("0.1*t".parse().unwrap(), 0.0, ModelParams::default());
        assert!(r.is_err());
    }

    #[test]
    fn holder_constants() {
        assert_eq!(holder_constant(&MapCurve::doubling(), 50), 0.0);
        let lin = MapCurve::single_frequency("0.1*t".parse().unwrap(), 1.0, ModelParams::default()).unwrap();
        assert!((holder_constant(&lin, 200) - 0.1 * (1.0 + TAU)).abs() < 1e-8);
        let jump = MapCurve::new(
            2,
            &[0.5],
            vec![
                vec![(1, Polynomial::constant(0.1))],
                vec![(1, Polynomial::constant(-0.1))],
            ],
            0.5,
            ModelParams::default(),
        )
        .unwrap();
        assert_eq!(holder_constant(&jump, 100), 0.0);
    }
}
