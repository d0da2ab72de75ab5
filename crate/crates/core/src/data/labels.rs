use super::DataError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Traffic category. The declaration order fixes the class index used by
/// classifiers and confusion matrices; `Normal` is always index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Normal,
    DoS,
    Probe,
    R2L,
    U2R,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Normal,
        ClassLabel::DoS,
        ClassLabel::Probe,
        ClassLabel::R2L,
        ClassLabel::U2R,
    ];

    pub const BINARY_NAMES: [&'static str; 2] = ["Normal", "Attack"];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// 0 for normal traffic, 1 for any attack.
    pub fn binary(self) -> usize {
        usize::from(self != ClassLabel::Normal)
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Normal => "Normal",
            ClassLabel::DoS => "DoS",
            ClassLabel::Probe => "Probe",
            ClassLabel::R2L => "R2L",
            ClassLabel::U2R => "U2R",
        }
    }

    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|c| c.name().to_string()).collect()
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| DataError::UnknownAttack(s.to_string()))
    }
}

/// Attack names seen in KDDTrain+/KDDTest+ and their categories. Spelling
/// variants found in the literature are listed next to the file spelling.
const ATTACKS: &[(&str, ClassLabel)] = &[
    ("normal", ClassLabel::Normal),
    // DoS
    ("back", ClassLabel::DoS),
    ("land", ClassLabel::DoS),
    ("mailbomb", ClassLabel::DoS),
    ("neptune", ClassLabel::DoS),
    ("pod", ClassLabel::DoS),
    ("smurf", ClassLabel::DoS),
    ("udpstorm", ClassLabel::DoS),
    ("teardrop", ClassLabel::DoS),
    ("processtable", ClassLabel::DoS),
    ("apache2", ClassLabel::DoS),
    ("worm", ClassLabel::DoS),
    // Probe
    ("satan", ClassLabel::Probe),
    ("ipsweep", ClassLabel::Probe),
    ("portsweep", ClassLabel::Probe),
    ("mscan", ClassLabel::Probe),
    ("nmap", ClassLabel::Probe),
    ("saint", ClassLabel::Probe),
    // R2L
    ("guess_passwd", ClassLabel::R2L),
    ("guess_password", ClassLabel::R2L),
    ("ftp_write", ClassLabel::R2L),
    ("imap", ClassLabel::R2L),
    ("warezmaster", ClassLabel::R2L),
    ("warezclient", ClassLabel::R2L),
    ("xlock", ClassLabel::R2L),
    ("phf", ClassLabel::R2L),
    ("xsnoop", ClassLabel::R2L),
    ("snmpguess", ClassLabel::R2L),
    ("snmpgetattack", ClassLabel::R2L),
    ("multihop", ClassLabel::R2L),
    ("named", ClassLabel::R2L),
    ("httptunnel", ClassLabel::R2L),
    ("sendmail", ClassLabel::R2L),
    ("spy", ClassLabel::R2L),
    // U2R
    ("buffer_overflow", ClassLabel::U2R),
    ("rootkit", ClassLabel::U2R),
    ("perl", ClassLabel::U2R),
    ("loadmodule", ClassLabel::U2R),
    ("sqlattack", ClassLabel::U2R),
    ("xterm", ClassLabel::U2R),
    ("ps", ClassLabel::U2R),
];

/// Maps an attack name (case-insensitive, surrounding whitespace and a trailing
/// `.` ignored) to its traffic category.
pub fn map_attack_to_class(attack_name: &str) -> Result<ClassLabel, DataError> {
    let key = attack_name
        .trim()
        .trim_end_matches('.')
        .to_ascii_lowercase();
    ATTACKS
        .iter()
        .find(|(name, _)| *name == key)
        .map(|(_, class)| *class)
        .ok_or_else(|| DataError::UnknownAttack(attack_name.to_string()))
}
