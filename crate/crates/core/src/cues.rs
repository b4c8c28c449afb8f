//! Username cues for profile identification.
//!
//! Kunya-style noms de guerre start with `Abu` (father) or `Umm` (mother);
//! `muhajir`, `mujahid` and `jihad` may appear anywhere in a handle.

use alloc::collections::BTreeSet;
use alloc::string::String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Cue {
    Abu,
    Umm,
    Muhajir,
    Mujahid,
    Jihad,
}

impl Cue {
    pub const ALL: [Cue; 5] = [Cue::Abu, Cue::Umm, Cue::Muhajir, Cue::Mujahid, Cue::Jihad];

    pub fn as_str(self) -> &'static str {
        match self {
            Cue::Abu => "abu",
            Cue::Umm => "umm",
            Cue::Muhajir => "muhajir",
            Cue::Mujahid => "mujahid",
            Cue::Jihad => "jihad",
        }
    }

    fn prefix_only(self) -> bool {
        matches!(self, Cue::Abu | Cue::Umm)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CueReport {
    pub username: String,
    pub cues: BTreeSet<Cue>,
}

impl CueReport {
    pub fn is_empty(&self) -> bool {
        self.cues.is_empty()
    }
}

pub fn username_cues(username: &str) -> CueReport {
    let name = username.strip_prefix('@').unwrap_or(username);
    let folded = name.to_lowercase();
    let cues = Cue::ALL
        .into_iter()
        .filter(|cue| {
            if cue.prefix_only() {
                folded.starts_with(cue.as_str())
            } else {
                folded.contains(cue.as_str())
            }
        })
        .collect();
    CueReport {
        username: String::from(name),
        cues,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn cues(name: &str) -> Vec<Cue> {
        username_cues(name).cues.into_iter().collect()
    }

    #[test]
    fn profile_examples() {
        assert_eq!(cues("AbuHamzaIS"), [Cue::Abu]);
        assert_eq!(cues("pioiuhghsd42424"), []);
        assert_eq!(cues("Muhajir_Miski1"), [Cue::Muhajir]);
        assert_eq!(cues("UmmWaqqas"), [Cue::Umm]);
        assert_eq!(cues("JihadiA6"), [Cue::Jihad]);
        assert_eq!(cues("@AbuluqmanIS"), [Cue::Abu]);
    }

    #[test]
    fn kunya_only_as_prefix() {
        assert_eq!(cues("_UmmWaqqas"), []);
        assert_eq!(cues("xabu"), []);
        assert_eq!(cues("abu_mujahid_jihad"), [Cue::Abu, Cue::Mujahid, Cue::Jihad]);
    }

    proptest! {
        #[test]
        fn abu_requires_prefix(name in "[a-zA-Z0-9_]{0,16}") {
            let report = username_cues(&name);
            if report.cues.contains(&Cue::Abu) {
                prop_assert!(name.to_lowercase().starts_with("abu"));
            }
        }
    }
}
