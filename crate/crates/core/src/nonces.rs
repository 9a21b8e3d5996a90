//! Nonce sets, reflection operators and share states.
//!
//! Nonce indices are 0-based in the API and 1-based wherever they are shown
//! to a user (reports, transcripts, plan files).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{tensor, Matrix, StateVector, UnitaryMatrix, C64};

/// Normalization slack accepted when loading nonce files.
pub const LOAD_NORM_TOL: f64 = 1e-6;

/// A two-bit secret string `b_E b_B`, stored as `2 * b_E + b_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Secret(u8);

impl Secret {
    pub const S00: Secret = Secret(0);
    pub const S01: Secret = Secret(1);
    pub const S10: Secret = Secret(2);
    pub const S11: Secret = Secret(3);
    pub const ALL: [Secret; 4] = [Self::S00, Self::S01, Self::S10, Self::S11];

    pub fn from_index(index: usize) -> Result<Self> {
        if index < 4 {
            Ok(Secret(index as u8))
        } else {
            Err(Error::InvalidSecret(index.to_string()))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Eve's bit (the first character).
    pub fn eve_bit(self) -> u8 {
        self.0 >> 1
    }

    /// Bob's bit (the second character).
    pub fn bob_bit(self) -> u8 {
        self.0 & 1
    }

    /// The bits differ: `01` or `10`.
    pub fn is_mixed_parity(self) -> bool {
        self.eve_bit() != self.bob_bit()
    }

    /// Standard-basis state `|s>`.
    pub fn state(self) -> StateVector {
        StateVector::basis(4, self.index()).expect("index < 4")
    }
}

impl fmt::Display for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.eve_bit(), self.bob_bit())
    }
}

impl FromStr for Secret {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "00" => Ok(Self::S00),
            "01" => Ok(Self::S01),
            "10" => Ok(Self::S10),
            "11" => Ok(Self::S11),
            other => Err(Error::InvalidSecret(other.to_string())),
        }
    }
}

impl Serialize for Secret {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Secret {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The two nonce sets shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinNonceSet {
    /// The sixteen products `|x>|y>`, `x, y` in `{+, -, +i, -i}`.
    HsuI,
    /// Four entangled nonces whose Bob-side shares are mutually unbiased.
    ProposedJ,
}

impl BuiltinNonceSet {
    pub const ALL: [BuiltinNonceSet; 2] = [Self::HsuI, Self::ProposedJ];

    pub fn name(self) -> &'static str {
        match self {
            Self::HsuI => "hsu-I",
            Self::ProposedJ => "proposed-J",
        }
    }
}

impl FromStr for BuiltinNonceSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hsu-I" => Ok(Self::HsuI),
            "proposed-J" => Ok(Self::ProposedJ),
            other => Err(Error::UnknownNonceSet(other.to_string())),
        }
    }
}

/// A named, ordered list of two-qubit nonce states.
#[derive(Debug, Clone, PartialEq)]
pub struct NonceSet {
    name: String,
    states: Vec<StateVector>,
}

/// The four single-qubit states `|+>, |->, |+i>, |-i>`, in that order.
pub fn axis_states() -> [StateVector; 4] {
    [
        StateVector::plus(),
        StateVector::minus(),
        StateVector::plus_i(),
        StateVector::minus_i(),
    ]
}

pub fn builtin_nonce_set(which: BuiltinNonceSet) -> NonceSet {
    let states = match which {
        BuiltinNonceSet::HsuI => {
            let axes = axis_states();
            axes.iter()
                .flat_map(|x| {
                    axes.iter()
                        .map(move |y| tensor(x, y).expect("qubit factors"))
                })
                .collect()
        }
        BuiltinNonceSet::ProposedJ => {
            let r = |x: f64| C64::new(x, 0.0);
            let i = |x: f64| C64::new(0.0, x);
            [
                [r(0.5), r(0.5), r(-0.5), r(0.5)],
                [r(0.5), r(-0.5), r(0.5), r(0.5)],
                [r(0.5), i(0.5), i(-0.5), r(-0.5)],
                [r(0.5), i(-0.5), i(0.5), r(-0.5)],
            ]
            .into_iter()
            .map(|amps| StateVector::new(amps.to_vec()).expect("normalized"))
            .collect()
        }
    };
    NonceSet {
        name: which.name().to_string(),
        states,
    }
}

#[derive(Serialize, Deserialize)]
struct NonceSetFile {
    name: String,
    states: Vec<Vec<[f64; 2]>>,
}

impl NonceSet {
    pub fn new(name: impl Into<String>, states: Vec<StateVector>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyNonceSet);
        }
        for (index, s) in states.iter().enumerate() {
            if s.dim() != 4 {
                return Err(Error::InvalidNonce {
                    index: index + 1,
                    reason: format!("expected 4 amplitudes, found {}", s.dim()),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            states,
        })
    }

    /// Resolves a builtin set by name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(builtin_nonce_set(name.parse()?))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&StateVector> {
        self.states.get(index)
    }

    /// Parses the JSON nonce-set format
    /// `{"name": ..., "states": [[[re, im] x 4], ...]}`.
    ///
    /// States within [`LOAD_NORM_TOL`] of unit norm are renormalized; others
    /// are rejected with their 1-based index.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: NonceSetFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("malformed nonce-set file: {e}")))?;
        let mut states = Vec::with_capacity(file.states.len());
        for (index, raw) in file.states.into_iter().enumerate() {
            let invalid = |reason: String| Error::InvalidNonce {
                index: index + 1,
                reason,
            };
            if raw.len() != 4 {
                return Err(invalid(format!(
                    "expected 4 amplitudes, found {}",
                    raw.len()
                )));
            }
            let amps: Vec<C64> = raw.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > LOAD_NORM_TOL {
                return Err(invalid(format!("not normalized (squared norm {norm_sq})")));
            }
            states.push(StateVector::normalize(amps).map_err(|e| invalid(e.to_string()))?);
        }
        Self::new(file.name, states)
    }

    pub fn to_json(&self) -> String {
        let file = NonceSetFile {
            name: self.name.clone(),
            states: self
                .states
                .iter()
                .map(|s| s.amps().iter().map(|a| [a.re, a.im]).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }
}

/// Grover reflection `I - 2 |about><about|`.
pub fn reflection(about: &StateVector) -> UnitaryMatrix {
    let dim = about.dim();
    let projector = Matrix::outer(about.amps(), about.amps());
    UnitaryMatrix::from_raw(Matrix::identity(dim).sub(&projector.scale(C64::new(2.0, 0.0))))
}

/// Reflection about the standard-basis state `|s>`.
pub fn secret_reflection(s: Secret) -> UnitaryMatrix {
    let mut d = [C64::new(1.0, 0.0); 4];
    d[s.index()] = C64::new(-1.0, 0.0);
    UnitaryMatrix::from_raw(Matrix::diag(&d))
}

/// `|psi_{i,s}> = U_s |nonce>`.
pub fn share_state(nonce: &StateVector, s: Secret) -> Result<StateVector> {
    if nonce.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            found: nonce.dim(),
        });
    }
    secret_reflection(s).apply(nonce)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_trace_e, DensityMatrix, TOL};

    fn half(amps: [(f64, f64); 4]) -> StateVector {
        StateVector::new(
            amps.iter()
                .map(|(r, i)| C64::new(r * 0.5, i * 0.5))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn builtin_sizes_and_members() {
        let hsu = builtin_nonce_set(BuiltinNonceSet::HsuI);
        let j = builtin_nonce_set(BuiltinNonceSet::ProposedJ);
        assert_eq!(hsu.len(), 16);
        assert_eq!(j.len(), 4);
        let plus_plus = half([(1.0, 0.0); 4]);
        assert!(hsu.states()[0].same_ray(&plus_plus, TOL));
        assert!(hsu.states().iter().any(|s| s.same_ray(&plus_plus, TOL)));
    }

    #[test]
    fn proposed_j_listed_states() {
        let j = builtin_nonce_set(BuiltinNonceSet::ProposedJ);
        let psi1 = half([(1.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (1.0, 0.0)]);
        let psi3 = half([(1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (-1.0, 0.0)]);
        assert!((j.states()[0].inner(&psi1).unwrap() - C64::new(1.0, 0.0)).norm() < TOL);
        assert!((j.states()[2].inner(&psi3).unwrap() - C64::new(1.0, 0.0)).norm() < TOL);
    }

    #[test]
    fn unknown_builtin_is_an_error() {
        assert_eq!(
            NonceSet::by_name("hsu-II"),
            Err(Error::UnknownNonceSet("hsu-II".into()))
        );
    }

    #[test]
    fn secret_parsing_and_bits() {
        let s: Secret = "10".parse().unwrap();
        assert_eq!((s.eve_bit(), s.bob_bit()), (1, 0));
        assert_eq!(s.to_string(), "10");
        assert!("2".parse::<Secret>().is_err());
        assert!("011".parse::<Secret>().is_err());
    }

    #[test]
    fn reflection_of_basis_state() {
        let u = reflection(&StateVector::basis(4, 0).unwrap());
        let want = Matrix::diag(&[
            C64::new(-1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
        ]);
        assert!(u.matrix().max_abs_diff(&want) < TOL);
    }

    #[test]
    fn grover_identity_on_plus_plus() {
        let c = half([(1.0, 0.0); 4]);
        let uc = reflection(&c);
        for s in Secret::ALL {
            let out = uc.apply(&secret_reflection(s).apply(&c).unwrap()).unwrap();
            let neg = out.scale(C64::new(-1.0, 0.0));
            let amp = s.state().inner(&neg).unwrap();
            assert!((amp - C64::new(1.0, 0.0)).norm() < TOL, "s = {s}");
        }
    }

    #[test]
    fn reflection_fixes_orthogonal_qubit_state() {
        let u = reflection(&StateVector::plus());
        let out = u.apply(&StateVector::minus()).unwrap();
        assert!((out.inner(&StateVector::minus()).unwrap() - C64::new(1.0, 0.0)).norm() < TOL);
    }

    #[test]
    fn reflection_properties() {
        let about = builtin_nonce_set(BuiltinNonceSet::ProposedJ).states()[2].clone();
        let u = reflection(&about);
        assert!(u.matrix().unitarity_defect() < TOL);
        assert!(u.matrix().is_hermitian(TOL));
        assert!((&u.matrix().clone() * u.matrix()).max_abs_diff(&Matrix::identity(4)) < TOL);
        assert!((u.matrix().determinant() - C64::new(-1.0, 0.0)).norm() < TOL);
        let flipped = u.apply(&about).unwrap();
        assert!((flipped.inner(&about).unwrap() + C64::new(1.0, 0.0)).norm() < TOL);
    }

    #[test]
    fn share_state_examples() {
        let j = builtin_nonce_set(BuiltinNonceSet::ProposedJ);
        let mm = tensor(&StateVector::minus(), &StateVector::minus()).unwrap();
        let pm = tensor(&StateVector::plus(), &StateVector::minus()).unwrap();
        let s01 = share_state(&j.states()[0], Secret::S01).unwrap();
        assert!(s01.same_ray(&mm, TOL));
        let s00 = share_state(&j.states()[0], Secret::S00).unwrap();
        assert!((s00.inner(&pm).unwrap() + C64::new(1.0, 0.0)).norm() < TOL);

        let pp = half([(1.0, 0.0); 4]);
        let s11 = share_state(&pp, Secret::S11).unwrap();
        let want = half([(1.0, 0.0), (1.0, 0.0), (1.0, 0.0), (-1.0, 0.0)]);
        assert!((s11.inner(&want).unwrap() - C64::new(1.0, 0.0)).norm() < TOL);
    }

    #[test]
    fn hsu_bob_shares_are_maximally_mixed() {
        let hsu = builtin_nonce_set(BuiltinNonceSet::HsuI);
        let mixed = DensityMatrix::maximally_mixed(2);
        for nonce in hsu.states() {
            for s in Secret::ALL {
                let bob = partial_trace_e(&share_state(nonce, s).unwrap().density()).unwrap();
                assert!(bob.max_norm_distance(&mixed) < TOL);
            }
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let j = builtin_nonce_set(BuiltinNonceSet::ProposedJ);
        let back = NonceSet::from_json(&j.to_json()).unwrap();
        assert_eq!(back.name(), "proposed-J");
        for (a, b) in j.states().iter().zip(back.states()) {
            assert!(a.same_ray(b, 1e-15));
        }

        let slightly_off = r#"{"name": "x", "states": [[[1.0000004, 0], [0, 0], [0, 0], [0, 0]]]}"#;
        let set = NonceSet::from_json(slightly_off).unwrap();
        assert!((set.states()[0].amps()[0].re - 1.0).abs() < 1e-15);

        let bad = r#"{"name": "x", "states": [[[0.5, 0], [0.5, 0], [0.5, 0], [0.5, 0]], [[1, 0], [1, 0], [0, 0], [0, 0]]]}"#;
        assert!(matches!(
            NonceSet::from_json(bad),
            Err(Error::InvalidNonce { index: 2, .. })
        ));

        let empty = r#"{"name": "x", "states": []}"#;
        assert_eq!(NonceSet::from_json(empty), Err(Error::EmptyNonceSet));

        let malformed = "{\n  \"name\": \"x\",\n  \"states\": [[[1, 0], [0, 0]\n";
        let err = NonceSet::from_json(malformed).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");

        let three = r#"{"name": "x", "states": [[[1, 0], [0, 0], [0, 0]]]}"#;
        assert!(matches!(
            NonceSet::from_json(three),
            Err(Error::InvalidNonce { index: 1, .. })
        ));
    }
}
