use std::fmt;
use std::str::FromStr;

use super::EntityType;
use crate::{Error, Result};

/// A BIO tag. The type label is present only in typed (multi-type) mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    B(Option<EntityType>),
    I(Option<EntityType>),
    O,
}

impl Tag {
    pub fn label(self) -> Option<EntityType> {
        match self {
            Tag::B(t) | Tag::I(t) => t,
            Tag::O => None,
        }
    }

    pub fn is_outside(self) -> bool {
        self == Tag::O
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(None) => f.write_str("B"),
            Tag::I(None) => f.write_str("I"),
            Tag::B(Some(t)) => write!(f, "B-{t}"),
            Tag::I(Some(t)) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownLabel {
            kind: "BIO tag",
            value: s.to_owned(),
        };
        match s {
            "O" => Ok(Tag::O),
            "B" => Ok(Tag::B(None)),
            "I" => Ok(Tag::I(None)),
            _ => {
                let (head, label) = s.split_once('-').ok_or_else(unknown)?;
                let label: EntityType = label.parse().map_err(|_| unknown())?;
                match head {
                    "B" => Ok(Tag::B(Some(label))),
                    "I" => Ok(Tag::I(Some(label))),
                    _ => Err(unknown()),
                }
            }
        }
    }
}

/// Checks BIO well-formedness: every `I` continues a `B` or `I` of the same
/// label. Returns the position of the first offending tag.
pub fn check_tags(tags: &[Tag]) -> std::result::Result<(), usize> {
    let mut prev = Tag::O;
    for (i, &tag) in tags.iter().enumerate() {
        if let Tag::I(label) = tag {
            let continues = match prev {
                Tag::B(p) | Tag::I(p) => p == label,
                Tag::O => false,
            };
            if !continues {
                return Err(i);
            }
        }
        prev = tag;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for s in ["O", "B", "I", "B-CellLine", "I-ChemicalEntity"] {
            assert_eq!(s.parse::<Tag>().unwrap().to_string(), s);
        }
        assert!("B-Chemical".parse::<Tag>().is_err());
        assert!("X".parse::<Tag>().is_err());
        assert!("E-CellLine".parse::<Tag>().is_err());
    }

    #[test]
    fn well_formedness() {
        use Tag::*;
        let chem = Some(EntityType::ChemicalEntity);
        let cell = Some(EntityType::CellLine);
        assert_eq!(check_tags(&[B(None), I(None), O, B(None)]), Ok(()));
        assert_eq!(check_tags(&[I(None)]), Err(0));
        assert_eq!(check_tags(&[B(None), O, I(None)]), Err(2));
        assert_eq!(check_tags(&[B(chem), I(chem)]), Ok(()));
        assert_eq!(check_tags(&[B(chem), I(cell)]), Err(1));
        assert_eq!(check_tags(&[]), Ok(()));
    }
}
