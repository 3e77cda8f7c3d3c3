//! Mapping between continuous swarm positions and integer network
//! topologies, plus the classic hidden-size rule of thumb.
//!
//! A particle lives in a 2-D real box; dimension 0 is the hidden-layer
//! count and dimension 1 the neurons per hidden layer. [`decode`]
//! rounds half-up and clamps so any finite position yields a valid
//! [`NetworkTopology`].

use alloc::vec::Vec;
use thiserror::Error;

/// Errors from position decoding and space construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    /// A position component was NaN or infinite; clamping would mask an
    /// upstream numeric bug, so this is surfaced instead.
    #[error("non-finite position component {value} at dimension {dim}")]
    NonFinitePosition {
        /// Dimension index of the offending component.
        dim: usize,
        /// The offending value.
        value: f64,
    },
    /// Positions must be 2-dimensional.
    #[error("expected a 2-dimensional position, got {got} dimensions")]
    WrongDimension {
        /// Number of dimensions received.
        got: usize,
    },
    /// Range bounds were inverted or zero.
    #[error("invalid topology space: {0}")]
    InvalidSpace(&'static str),
}

/// Inclusive integer ranges for layer count and neurons per layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TopologySpace {
    /// Minimum hidden-layer count, at least 1.
    pub min_layers: u32,
    /// Maximum hidden-layer count.
    pub max_layers: u32,
    /// Minimum neurons per hidden layer, at least 1.
    pub min_neurons: u32,
    /// Maximum neurons per hidden layer.
    pub max_neurons: u32,
}

impl TopologySpace {
    /// Builds a space, checking range ordering and positivity.
    pub fn new(
        min_layers: u32,
        max_layers: u32,
        min_neurons: u32,
        max_neurons: u32,
    ) -> Result<Self, TopologyError> {
        if min_layers < 1 || min_neurons < 1 {
            return Err(TopologyError::InvalidSpace("minimums must be at least 1"));
        }
        if min_layers > max_layers || min_neurons > max_neurons {
            return Err(TopologyError::InvalidSpace("min exceeds max"));
        }
        Ok(Self {
            min_layers,
            max_layers,
            min_neurons,
            max_neurons,
        })
    }

    /// True when `topology` lies within both ranges.
    pub fn contains(&self, topology: &NetworkTopology) -> bool {
        (self.min_layers..=self.max_layers).contains(&topology.num_hidden_layers)
            && (self.min_neurons..=self.max_neurons).contains(&topology.neurons_per_layer)
    }

    /// Number of distinct topologies in the space.
    pub fn cell_count(&self) -> u64 {
        u64::from(self.max_layers - self.min_layers + 1)
            * u64::from(self.max_neurons - self.min_neurons + 1)
    }

    /// All topologies in the space, layers-major.
    pub fn enumerate(&self) -> Vec<NetworkTopology> {
        let mut out = Vec::with_capacity(self.cell_count() as usize);
        for layers in self.min_layers..=self.max_layers {
            for neurons in self.min_neurons..=self.max_neurons {
                out.push(NetworkTopology::new(layers, neurons));
            }
        }
        out
    }
}

impl Default for TopologySpace {
    /// Layers 1–10, neurons 1–200; the range every concrete
    /// configuration discussed by the experiments falls into.
    fn default() -> Self {
        Self {
            min_layers: 1,
            max_layers: 10,
            min_neurons: 1,
            max_neurons: 200,
        }
    }
}

/// A network shape: hidden-layer count and a uniform per-layer width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkTopology {
    /// Number of hidden layers.
    pub num_hidden_layers: u32,
    /// Neurons in each hidden layer.
    pub neurons_per_layer: u32,
}

impl NetworkTopology {
    /// Creates a topology. Validation against a space is the caller's
    /// job via [`TopologySpace::contains`].
    pub fn new(num_hidden_layers: u32, neurons_per_layer: u32) -> Self {
        Self {
            num_hidden_layers,
            neurons_per_layer,
        }
    }
}

impl core::fmt::Display for NetworkTopology {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}x{}", self.num_hidden_layers, self.neurons_per_layer)
    }
}

/// Rounds half-up: 2.5 becomes 3, -0.5 becomes 0.
fn round_half_up(x: f64) -> f64 {
    libm::floor(x + 0.5)
}

fn decode_component(value: f64, dim: usize, min: u32, max: u32) -> Result<u32, TopologyError> {
    if !value.is_finite() {
        return Err(TopologyError::NonFinitePosition { dim, value });
    }
    let rounded = round_half_up(value);
    let clamped = rounded.clamp(f64::from(min), f64::from(max));
    Ok(clamped as u32)
}

/// Maps a continuous 2-D position onto the nearest valid topology.
///
/// Each component is rounded half-up, then clamped into its range.
/// Non-finite components are rejected.
pub fn decode(position: &[f64], space: &TopologySpace) -> Result<NetworkTopology, TopologyError> {
    if position.len() != 2 {
        return Err(TopologyError::WrongDimension {
            got: position.len(),
        });
    }
    let layers = decode_component(position[0], 0, space.min_layers, space.max_layers)?;
    let neurons = decode_component(position[1], 1, space.min_neurons, space.max_neurons)?;
    Ok(NetworkTopology::new(layers, neurons))
}

/// Exact real representation of a topology; `decode(encode(t)) == t`
/// for any topology inside the space.
pub fn encode(topology: &NetworkTopology) -> [f64; 2] {
    [
        f64::from(topology.num_hidden_layers),
        f64::from(topology.neurons_per_layer),
    ]
}

/// Hidden-size heuristic: two thirds of input plus output size,
/// rounded half-up, never below 1.
pub fn rule_of_thumb_hidden_size(input_dim: u32, output_dim: u32) -> u32 {
    let h = round_half_up(f64::from(input_dim + output_dim) * 2.0 / 3.0);
    if h < 1.0 {
        1
    } else {
        h as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_space() -> TopologySpace {
        TopologySpace::default()
    }

    #[test]
    fn decode_rounds_half_up() {
        let t = decode(&[3.4, 61.7], &default_space()).unwrap();
        assert_eq!(t, NetworkTopology::new(3, 62));
        // exact .5 goes up
        let t = decode(&[2.5, 2.5], &default_space()).unwrap();
        assert_eq!(t, NetworkTopology::new(3, 3));
    }

    #[test]
    fn decode_clamps_both_ends() {
        let t = decode(&[0.2, 250.0], &default_space()).unwrap();
        assert_eq!(t, NetworkTopology::new(1, 200));
    }

    #[test]
    fn decode_integer_position_is_identity() {
        let t = decode(&[1.0, 61.0], &default_space()).unwrap();
        assert_eq!(t, NetworkTopology::new(1, 61));
    }

    #[test]
    fn decode_rejects_non_finite() {
        assert!(matches!(
            decode(&[f64::NAN, 5.0], &default_space()),
            Err(TopologyError::NonFinitePosition { dim: 0, .. })
        ));
        assert!(matches!(
            decode(&[5.0, f64::INFINITY], &default_space()),
            Err(TopologyError::NonFinitePosition { dim: 1, .. })
        ));
    }

    #[test]
    fn decode_rejects_wrong_dimension() {
        assert_eq!(
            decode(&[1.0], &default_space()),
            Err(TopologyError::WrongDimension { got: 1 })
        );
    }

    #[test]
    fn encode_is_exact() {
        assert_eq!(encode(&NetworkTopology::new(5, 200)), [5.0, 200.0]);
        assert_eq!(encode(&NetworkTopology::new(1, 1)), [1.0, 1.0]);
    }

    #[test]
    fn space_validation() {
        assert!(TopologySpace::new(0, 10, 1, 200).is_err());
        assert!(TopologySpace::new(5, 4, 1, 200).is_err());
        assert!(TopologySpace::new(1, 10, 1, 200).is_ok());
    }

    #[test]
    fn space_enumerate_matches_cell_count() {
        let space = TopologySpace::new(1, 3, 2, 5).unwrap();
        let all = space.enumerate();
        assert_eq!(all.len() as u64, space.cell_count());
        assert_eq!(all[0], NetworkTopology::new(1, 2));
        assert_eq!(all[all.len() - 1], NetworkTopology::new(3, 5));
    }

    #[test]
    fn rule_of_thumb_examples() {
        assert_eq!(rule_of_thumb_hidden_size(6, 3), 6);
        assert_eq!(rule_of_thumb_hidden_size(1, 1), 1);
        assert_eq!(rule_of_thumb_hidden_size(4, 3), 5);
    }

    #[test]
    fn decode_idempotent_on_integer_in_range() {
        let space = default_space();
        for (l, n) in [(1u32, 1u32), (10, 200), (3, 62)] {
            let t = NetworkTopology::new(l, n);
            let decoded = decode(&encode(&t), &space).unwrap();
            assert_eq!(decoded, t);
            let redecoded = decode(&encode(&decoded), &space).unwrap();
            assert_eq!(redecoded, t);
        }
    }
}
