use serde::{Deserialize, Serialize};

/// Languages the harness knows how to lex, compile, and extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Fortran,
    Cpp,
    C,
}

impl Lang {
    /// Map a file extension to a language tag.
    pub fn from_extension(ext: &str) -> Option<Lang> {
        match ext.to_ascii_lowercase().as_str() {
            "f" | "f77" | "f90" | "f95" | "f03" | "f08" | "for" | "ftn" => Some(Lang::Fortran),
            "cpp" | "cc" | "cxx" | "c++" | "hpp" => Some(Lang::Cpp),
            "c" => Some(Lang::C),
            _ => None,
        }
    }

    /// Canonical source-file extension used when materializing code on disk.
    pub fn extension(self) -> &'static str {
        match self {
            Lang::Fortran => "f90",
            Lang::Cpp => "cpp",
            Lang::C => "c",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Lang::Fortran => "fortran",
            Lang::Cpp => "cpp",
            Lang::C => "c",
        }
    }

    pub fn from_name(name: &str) -> Option<Lang> {
        match name.to_ascii_lowercase().as_str() {
            "fortran" | "f90" => Some(Lang::Fortran),
            "cpp" | "c++" | "cxx" => Some(Lang::Cpp),
            "c" => Some(Lang::C),
            _ => None,
        }
    }

    /// Fence tags accepted as "tagged for this language" during code extraction.
    pub fn fence_tags(self) -> &'static [&'static str] {
        match self {
            Lang::Fortran => &["fortran", "f90", "f", "f95"],
            Lang::Cpp => &["cpp", "c++", "cxx"],
            Lang::C => &["c"],
        }
    }
}
