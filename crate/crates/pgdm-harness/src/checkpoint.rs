//! Score-net checkpoints: a single-line JSON header describing the
//! architecture, a newline, then every parameter as little-endian
//! 64-bit floats in the net's flat layout (per layer: row-major weight
//! matrix, then biases).

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use pgdm_core::{Activation, MlpScoreNet};

use crate::error::{HarnessError, Stage, StageExt};

/// How the net consumes the noise level. The only mode this crate
/// produces: σ is appended as an input feature and the output is scaled
/// by 1/σ.
pub const SIGMA_CONDITIONING: &str = "append_input_scale_inverse";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
struct CheckpointHeader {
    /// State dimension the net scores.
    dim: usize,
    /// Hidden-layer widths (excludes the input and output layers).
    hidden: Vec<usize>,
    activation: String,
    sigma_conditioning: String,
    /// Total f64 parameter count that follows the header.
    param_count: usize,
}

/// Serializes a net to the checkpoint byte format.
pub fn to_bytes(net: &MlpScoreNet) -> Vec<u8> {
    let widths = net.widths();
    let header = CheckpointHeader {
        dim: net.dim(),
        hidden: widths[1..widths.len() - 1].to_vec(),
        activation: net.activation().name().to_string(),
        sigma_conditioning: SIGMA_CONDITIONING.to_string(),
        param_count: net.param_count(),
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    for p in net.params() {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    bytes
}

/// Parses a checkpoint back into a net, validating the header and the
/// payload length.
pub fn from_bytes(bytes: &[u8]) -> Result<MlpScoreNet, HarnessError> {
    let bad = |msg: String| HarnessError::new(Stage::Train, msg);
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("checkpoint has no header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| bad(format!("checkpoint header is not valid JSON: {e}")))?;
    if header.sigma_conditioning != SIGMA_CONDITIONING {
        return Err(bad(format!(
            "unsupported noise conditioning '{}'; this build reads '{}'",
            header.sigma_conditioning, SIGMA_CONDITIONING
        )));
    }
    let activation = Activation::from_name(&header.activation)
        .ok_or_else(|| bad(format!("unknown activation '{}'", header.activation)))?;
    let mut net = MlpScoreNet::zeros(header.dim, &header.hidden, activation);
    if net.param_count() != header.param_count {
        return Err(bad(format!(
            "header claims {} parameters but the architecture has {}",
            header.param_count,
            net.param_count()
        )));
    }
    let payload = &bytes[newline + 1..];
    if payload.len() != header.param_count * 8 {
        return Err(bad(format!(
            "checkpoint payload is {} bytes, expected {} (8 per parameter)",
            payload.len(),
            header.param_count * 8
        )));
    }
    let params: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk is 8 bytes")))
        .collect();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(bad("checkpoint contains non-finite parameters".into()));
    }
    net.set_params(&params).stage(Stage::Train)?;
    Ok(net)
}

/// Writes a checkpoint file.
pub fn save(net: &MlpScoreNet, path: &Path) -> Result<(), HarnessError> {
    let mut file = fs::File::create(path)
        .map_err(|e| HarnessError::new(Stage::Io, format!("create {}: {e}", path.display())))?;
    file.write_all(&to_bytes(net))
        .map_err(|e| HarnessError::new(Stage::Io, format!("write {}: {e}", path.display())))
}

/// Reads a checkpoint file.
pub fn load(path: &Path) -> Result<MlpScoreNet, HarnessError> {
    let bytes = fs::read(path)
        .map_err(|e| HarnessError::new(Stage::Io, format!("read {}: {e}", path.display())))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pgdm_core::mlp_forward;

    fn sample_net() -> MlpScoreNet {
        MlpScoreNet::new(3, &[8, 5], Activation::Tanh, 42)
    }

    #[test]
    fn roundtrip_preserves_every_parameter_and_the_forward_pass() {
        let net = sample_net();
        let restored = from_bytes(&to_bytes(&net)).unwrap();
        assert_eq!(net.params(), restored.params());
        assert_eq!(net.widths(), restored.widths());
        assert_eq!(net.activation().name(), restored.activation().name());
        let x = pgdm_core::StateVector::flat(vec![0.3, -1.2, 0.7]).unwrap();
        let a = mlp_forward(&net, &x, 0.5).unwrap();
        let b = mlp_forward(&restored, &x, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn file_roundtrip_matches_in_memory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net = sample_net();
        save(&net, &path).unwrap();
        let restored = load(&path).unwrap();
        assert_eq!(net.params(), restored.params());
    }

    #[test]
    fn header_is_a_single_json_line() {
        let bytes = to_bytes(&sample_net());
        let newline = bytes.iter().position(|&b| b == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&bytes[..newline]).unwrap();
        assert_eq!(header["dim"], 3);
        assert_eq!(header["hidden"][0], 8);
        assert_eq!(header["hidden"][1], 5);
        assert_eq!(header["activation"], "tanh");
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut bytes = to_bytes(&sample_net());
        bytes.truncate(bytes.len() - 4);
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("payload"), "{err}");
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let mut bytes = to_bytes(&sample_net());
        bytes[0] = b'x';
        assert!(from_bytes(&bytes).is_err());
    }

    #[test]
    fn wrong_conditioning_mode_is_rejected() {
        let bytes = to_bytes(&sample_net());
        let newline = bytes.iter().position(|&b| b == b'\n').unwrap();
        let text = std::str::from_utf8(&bytes[..newline]).unwrap();
        let swapped = text.replace(SIGMA_CONDITIONING, "embedding_table");
        let mut out = swapped.into_bytes();
        out.push(b'\n');
        out.extend_from_slice(&bytes[newline + 1..]);
        let err = from_bytes(&out).unwrap_err();
        assert!(err.to_string().contains("conditioning"), "{err}");
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let net = sample_net();
        let mut bytes = to_bytes(&net);
        let newline = bytes.iter().position(|&b| b == b'\n').unwrap();
        let nan = f64::NAN.to_le_bytes();
        bytes[newline + 1..newline + 9].copy_from_slice(&nan);
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("non-finite"), "{err}");
    }
}
