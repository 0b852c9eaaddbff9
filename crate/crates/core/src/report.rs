//! Output formatting shared by the reports and the CLI.
//!
//! Floats are written with 17 significant digits (`d.dddddddddddddddde±x`),
//! which round-trips every binary64 value. Non-finite values are written as
//! the strings `nan`, `inf` and `-inf`, in JSON as well as CSV.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kernel::RateBound;

/// Name of the generator behind every seeded draw.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), stream = trial counter";

/// Independent generator for trial `counter` under a master seed.
pub fn trial_rng(seed: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter);
    rng
}

/// Seed for grid cell `index`, via one splitmix64 step.
pub fn cell_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub mod float17 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Number(f64),
        Sentinel(String),
    }

    impl Repr {
        pub(super) fn value<E: serde::de::Error>(self) -> Result<f64, E> {
            match self {
                Repr::Number(x) => Ok(x),
                Repr::Sentinel(s) => match s.as_str() {
                    "nan" => Ok(f64::NAN),
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    other => Err(E::custom(format!("expected a number or nan/inf/-inf, got {other:?}"))),
                },
            }
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            let raw = RawValue::from_string(super::fmt17(*x)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_str(&super::fmt17(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Repr::deserialize(d)?.value()
    }
}

/// Like [`float17`], with `None` written as `null`.
pub mod float17_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::float17::Repr;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::float17::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<Repr>::deserialize(d)?.map(Repr::value).transpose()
    }
}

pub mod float17_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    struct Wrap(f64);

    impl serde::Serialize for Wrap {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::float17::serialize(&self.0, s)
        }
    }

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&Wrap(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<super::float17::Repr>::deserialize(d)?.into_iter().map(super::float17::Repr::value).collect()
    }
}

pub const SWEEP_HEADER: &str = "gamma,branch_mu,branch_rho,bound,min_form,regime";

/// One CSV row per stepsize; gated max-form columns print `nan`.
pub fn sweep_csv(rows: &[(f64, RateBound)]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for (gamma, r) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt17(*gamma),
            fmt17(r.branch_mu.unwrap_or(f64::NAN)),
            fmt17(r.branch_rho),
            fmt17(r.max_value.unwrap_or(f64::NAN)),
            fmt17(r.min_form),
            r.regime.as_str()
        );
    }
    out
}
