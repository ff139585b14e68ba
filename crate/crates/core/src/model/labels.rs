//! The fixed 10-label set.
//!
//! Index assignment is alphabetical by name and is stored in every checkpoint
//! header, so a saved model is self-describing about what its output columns
//! mean.

use crate::error::{Error, Result};

/// Canonical class names in index order (alphabetical).
pub const CLASS_NAMES: [&str; 10] = [
    "Angioectasia",
    "Bleeding",
    "Erosion",
    "Erythema",
    "Foreign Body",
    "Lymphangiectasia",
    "Normal",
    "Polyp",
    "Ulcer",
    "Worms",
];

pub const NUM_CLASSES: usize = CLASS_NAMES.len();

/// One of the ten classes, identified by its alphabetical index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassLabel(usize);

impl ClassLabel {
    pub fn from_index(index: usize) -> Result<Self> {
        if index >= NUM_CLASSES {
            return Err(Error::Label(format!(
                "class index {index} out of range 0..{NUM_CLASSES}"
            )));
        }
        Ok(Self(index))
    }

    pub fn from_name(name: &str) -> Result<Self> {
        CLASS_NAMES
            .iter()
            .position(|&n| n == name)
            .map(Self)
            .ok_or_else(|| Error::Label(format!("unknown class name `{name}`")))
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn name(self) -> &'static str {
        CLASS_NAMES[self.0]
    }

    pub fn all() -> impl Iterator<Item = ClassLabel> {
        (0..NUM_CLASSES).map(ClassLabel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_alphabetical() {
        let mut sorted = CLASS_NAMES;
        sorted.sort_unstable();
        assert_eq!(sorted, CLASS_NAMES);
    }

    #[test]
    fn name_index_round_trip() {
        for label in ClassLabel::all() {
            assert_eq!(ClassLabel::from_name(label.name()).unwrap(), label);
            assert_eq!(ClassLabel::from_index(label.index()).unwrap(), label);
        }
    }

    #[test]
    fn unknown_names_and_indices_are_rejected() {
        assert!(matches!(ClassLabel::from_name("Tumor"), Err(Error::Label(_))));
        assert!(ClassLabel::from_index(10).is_err());
    }
}
