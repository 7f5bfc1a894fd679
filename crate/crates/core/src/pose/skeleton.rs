//! Canonical joint layouts.
//!
//! Feature code addresses joints by a small semantic index plus a side, the
//! same way for 2D and 3D bodies. Each skeleton maps `(index, side)` to a
//! storage slot in the per-frame keypoint list.
//!
//! Hand (21 slots, slot == index): the thumb tip is 3, the middle joint of the
//! index finger is 5 and the index tip is 6. Body indices: pelvis 0, neck 1,
//! foot 2, knee 3, hip 4, shoulder 5, elbow 6, wrist 7. Pelvis and neck are
//! centre joints; the rest are sided.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod hand {
    pub const WRIST: usize = 0;
    pub const THUMB_TIP: usize = 3;
    pub const INDEX_MID: usize = 5;
    pub const INDEX_TIP: usize = 6;
}

pub mod body {
    pub const PELVIS: usize = 0;
    pub const NECK: usize = 1;
    pub const FOOT: usize = 2;
    pub const KNEE: usize = 3;
    pub const HIP: usize = 4;
    pub const SHOULDER: usize = 5;
    pub const ELBOW: usize = 6;
    pub const WRIST: usize = 7;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Skeleton {
    #[serde(rename = "H2")]
    Hand2D,
    #[serde(rename = "B2")]
    Body2D,
    #[serde(rename = "B3")]
    Body3D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
    Center,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
            Side::Center => "center",
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Right => Side::Left,
            Side::Left => Side::Right,
            Side::Center => Side::Center,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

const HAND_SLOTS: [&str; 21] = [
    "wrist",
    "thumb_cmc",
    "thumb_mcp",
    "thumb_tip",
    "index_mcp",
    "index_mid",
    "index_tip",
    "middle_mcp",
    "middle_pip",
    "middle_dip",
    "middle_tip",
    "ring_mcp",
    "ring_pip",
    "ring_dip",
    "ring_tip",
    "pinky_mcp",
    "pinky_pip",
    "pinky_dip",
    "pinky_tip",
    "thumb_ip",
    "index_dip",
];

pub const BODY_NAMES: [&str; 8] = ["pelvis", "neck", "foot", "knee", "hip", "shoulder", "elbow", "wrist"];

const BODY2D_SLOTS: [(Side, &str); 25] = [
    (Side::Center, "pelvis"),
    (Side::Center, "neck"),
    (Side::Right, "foot"),
    (Side::Right, "knee"),
    (Side::Right, "hip"),
    (Side::Right, "shoulder"),
    (Side::Right, "elbow"),
    (Side::Right, "wrist"),
    (Side::Left, "foot"),
    (Side::Left, "knee"),
    (Side::Left, "hip"),
    (Side::Left, "shoulder"),
    (Side::Left, "elbow"),
    (Side::Left, "wrist"),
    (Side::Center, "nose"),
    (Side::Right, "eye"),
    (Side::Left, "eye"),
    (Side::Right, "ear"),
    (Side::Left, "ear"),
    (Side::Right, "big_toe"),
    (Side::Left, "big_toe"),
    (Side::Right, "small_toe"),
    (Side::Left, "small_toe"),
    (Side::Right, "heel"),
    (Side::Left, "heel"),
];

const BODY3D_SLOTS: [(Side, &str); 17] = [
    (Side::Center, "pelvis"),
    (Side::Right, "hip"),
    (Side::Right, "knee"),
    (Side::Right, "foot"),
    (Side::Left, "hip"),
    (Side::Left, "knee"),
    (Side::Left, "foot"),
    (Side::Center, "spine"),
    (Side::Center, "neck"),
    (Side::Center, "nose"),
    (Side::Center, "head"),
    (Side::Left, "shoulder"),
    (Side::Left, "elbow"),
    (Side::Left, "wrist"),
    (Side::Right, "shoulder"),
    (Side::Right, "elbow"),
    (Side::Right, "wrist"),
];

impl Skeleton {
    /// Number of keypoints stored per frame for one instance of this skeleton.
    pub const fn len(self) -> usize {
        match self {
            Skeleton::Hand2D => HAND_SLOTS.len(),
            Skeleton::Body2D => BODY2D_SLOTS.len(),
            Skeleton::Body3D => BODY3D_SLOTS.len(),
        }
    }

    pub fn has_axis(self, axis: Axis) -> bool {
        axis != Axis::Z || self == Skeleton::Body3D
    }

    /// Resolves a semantic joint index and side to a storage slot.
    ///
    /// For hands the side selects the hand and must be left or right.
    pub fn slot(self, joint: usize, side: Side) -> Result<usize> {
        match self {
            Skeleton::Hand2D => {
                if side == Side::Center {
                    return Err(Error::Index("hand joints need a left or right side".into()));
                }
                if joint >= HAND_SLOTS.len() {
                    return Err(Error::Index(format!("hand joint {joint} out of range")));
                }
                Ok(joint)
            }
            Skeleton::Body2D | Skeleton::Body3D => {
                let name = BODY_NAMES
                    .get(joint)
                    .ok_or_else(|| Error::Index(format!("body joint {joint} out of range")))?;
                self.slots()
                    .iter()
                    .position(|&(s, n)| s == side && n == *name)
                    .ok_or_else(|| Error::Index(format!("body joint {name} has no {side} side")))
            }
        }
    }

    /// `(side, name)` for every storage slot, in order. Hand slots report
    /// `Side::Center` because the hand itself carries the side.
    pub fn slots(self) -> Vec<(Side, &'static str)> {
        match self {
            Skeleton::Hand2D => HAND_SLOTS.iter().map(|&n| (Side::Center, n)).collect(),
            Skeleton::Body2D => BODY2D_SLOTS.to_vec(),
            Skeleton::Body3D => BODY3D_SLOTS.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn slot_maps_are_injective() {
        for sk in [Skeleton::Hand2D, Skeleton::Body2D, Skeleton::Body3D] {
            let slots = sk.slots();
            assert_eq!(slots.len(), sk.len());
            let unique: HashSet<_> = slots.iter().collect();
            assert_eq!(unique.len(), slots.len(), "{sk:?}");
        }
    }

    #[test]
    fn every_semantic_index_resolves() {
        for sk in [Skeleton::Body2D, Skeleton::Body3D] {
            assert_eq!(sk.slot(body::PELVIS, Side::Center).unwrap(), 0);
            sk.slot(body::NECK, Side::Center).unwrap();
            for joint in body::FOOT..=body::WRIST {
                let r = sk.slot(joint, Side::Right).unwrap();
                let l = sk.slot(joint, Side::Left).unwrap();
                assert_ne!(r, l);
            }
        }
        assert_eq!(Skeleton::Hand2D.slot(hand::THUMB_TIP, Side::Left).unwrap(), 3);
        assert_eq!(Skeleton::Hand2D.slot(hand::INDEX_MID, Side::Right).unwrap(), 5);
        assert_eq!(Skeleton::Hand2D.slot(hand::INDEX_TIP, Side::Right).unwrap(), 6);
        assert_eq!(Skeleton::Body2D.slot(body::WRIST, Side::Right).unwrap(), 7);
        assert_eq!(Skeleton::Body2D.slot(body::ELBOW, Side::Right).unwrap(), 6);
    }

    #[test]
    fn invalid_lookups() {
        assert!(Skeleton::Hand2D.slot(3, Side::Center).is_err());
        assert!(Skeleton::Hand2D.slot(21, Side::Left).is_err());
        assert!(Skeleton::Body2D.slot(body::PELVIS, Side::Left).is_err());
        assert!(Skeleton::Body3D.slot(body::KNEE, Side::Center).is_err());
        assert!(Skeleton::Body2D.slot(8, Side::Right).is_err());
        assert!(!Skeleton::Hand2D.has_axis(Axis::Z));
    }
}
