//! Version and configuration fingerprint stamped on every artifact.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SkinError};
use crate::VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// SHA-256 of the canonical JSON of the configuration.
    pub config_hash: String,
}

/// Hex SHA-256 of the compact JSON encoding of `config`. Struct fields
/// serialize in declaration order and maps are ordered, so the encoding is
/// canonical for the types used here.
pub fn config_hash<T: Serialize + ?Sized>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config).map_err(|e| SkinError::validation(format!("unserializable config: {e}")))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Provenance {
    pub fn of<T: Serialize + ?Sized>(config: &T) -> Result<Self> {
        Ok(Provenance {
            version: VERSION.to_string(),
            config_hash: config_hash(config)?,
        })
    }

    /// Comment line prepended to CSV artifacts.
    pub fn csv_header(&self) -> String {
        format!("# version={} config_hash={}\n", self.version, self.config_hash)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"seed": 7, "voxels": 80})).unwrap();
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_hash(&serde_json::json!({"voxels": 80, "seed": 7})).unwrap());
        assert_ne!(a, config_hash(&serde_json::json!({"seed": 8, "voxels": 80})).unwrap());
        // SHA-256 of the two bytes `{}`
        assert_eq!(
            config_hash(&serde_json::json!({})).unwrap(),
            "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"
        );
    }

    #[test]
    fn csv_header_format() {
        let p = Provenance::of(&1u8).unwrap();
        assert!(p.csv_header().starts_with(&format!("# version={VERSION} config_hash=")));
        assert!(p.csv_header().ends_with('\n'));
    }
}
