//! JSON form: an array of `{"theta": .., "pi": ..}` objects sorted by theta.

use serde::de::{DeserializeOwned, Error as _};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::MixingDistribution;
use crate::scalar::Scalar;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomRecord<T> {
    theta: T,
    pi: T,
}

impl<T: Scalar + Serialize> Serialize for MixingDistribution<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.order()))?;
        for (theta, pi) in self.atoms() {
            seq.serialize_element(&AtomRecord { theta, pi })?;
        }
        seq.end()
    }
}

impl<'de, T: Scalar + DeserializeOwned> Deserialize<'de> for MixingDistribution<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let records: Vec<AtomRecord<T>> = Vec::deserialize(deserializer)?;
        MixingDistribution::new(records.into_iter().map(|r| (r.theta, r.pi)))
            .map_err(D::Error::custom)
    }
}
