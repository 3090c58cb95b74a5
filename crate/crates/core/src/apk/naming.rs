//! Package-name heuristics: app-builder naming schemes and the reverse
//! domain naming convention.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Table of known app-builder package naming schemes.
#[derive(Debug, Clone)]
pub struct BuilderSchemes {
    schemes: Vec<(String, Regex)>,
}

impl Default for BuilderSchemes {
    fn default() -> Self {
        let mut schemes = BuilderSchemes {
            schemes: Vec::new(),
        };
        schemes
            .register("andromo", r"^(com|net)\.andromo\.dev[0-9]+\.app[0-9]+$")
            .expect("built-in pattern");
        schemes
    }
}

impl BuilderSchemes {
    pub fn empty() -> Self {
        BuilderSchemes {
            schemes: Vec::new(),
        }
    }

    pub fn register(&mut self, tag: &str, pattern: &str) -> Result<(), regex::Error> {
        self.schemes.push((tag.to_string(), Regex::new(pattern)?));
        Ok(())
    }

    /// Tag of the first scheme matching `package_name`.
    pub fn match_package(&self, package_name: &str) -> Option<&str> {
        self.schemes
            .iter()
            .find(|(_, re)| re.is_match(package_name))
            .map(|(tag, _)| tag.as_str())
    }
}

static DEFAULT_SCHEMES: LazyLock<BuilderSchemes> = LazyLock::new(BuilderSchemes::default);

/// Matches against the built-in builder schemes.
pub fn match_package_scheme(package_name: &str) -> Option<&'static str> {
    DEFAULT_SCHEMES.match_package(package_name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamingMatch {
    Match,
    PartialMatch,
    NoMatch,
    NoWebsite,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamingCheck {
    pub outcome: NamingMatch,
    /// Set when the website could not be parsed.
    pub unparseable_url: bool,
}

fn registrable_domain(website: &str) -> Option<String> {
    let candidate = if website.contains("://") {
        website.to_string()
    } else {
        format!("http://{website}")
    };
    let parsed = url::Url::parse(&candidate).ok()?;
    let host = match parsed.host()? {
        url::Host::Domain(d) => d.trim_end_matches('.').to_ascii_lowercase(),
        _ => return None,
    };
    psl::domain_str(&host).map(str::to_string)
}

fn squash(label: &str) -> String {
    label
        .chars()
        .filter(|c| *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

/// Compares a package name with the reversed registrable domain of the
/// developer website.
pub fn check_naming_convention(package_name: &str, website: Option<&str>) -> NamingCheck {
    let website = website.map(str::trim).filter(|w| !w.is_empty());
    let Some(website) = website else {
        return NamingCheck {
            outcome: NamingMatch::NoWebsite,
            unparseable_url: false,
        };
    };
    let Some(domain) = registrable_domain(website) else {
        return NamingCheck {
            outcome: NamingMatch::NoMatch,
            unparseable_url: true,
        };
    };
    let package: Vec<String> = package_name.split('.').map(str::to_lowercase).collect();
    let reversed: Vec<&str> = domain.split('.').rev().collect();
    let outcome =
        if package.len() >= reversed.len() && package.iter().zip(&reversed).all(|(p, d)| p == d) {
            NamingMatch::Match
        } else {
            let second_level = squash(domain.split('.').next().unwrap_or_default());
            if !second_level.is_empty() && package.iter().any(|p| squash(p) == second_level) {
                NamingMatch::PartialMatch
            } else {
                NamingMatch::NoMatch
            }
        };
    NamingCheck {
        outcome,
        unparseable_url: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn andromo_scheme() {
        assert_eq!(
            match_package_scheme("com.andromo.dev271569.app366038"),
            Some("andromo")
        );
        assert_eq!(
            match_package_scheme("net.andromo.dev1.app2"),
            Some("andromo")
        );
        assert_eq!(match_package_scheme("org.moire.opensudoku"), None);
        assert_eq!(match_package_scheme("com.andromo.dev1.app2.extra"), None);
        assert_eq!(match_package_scheme("com.andromo.devx.app2"), None);
    }

    #[test]
    fn registering_schemes() {
        let mut schemes = BuilderSchemes::default();
        schemes
            .register("seattleclouds", r"^com\.seattleclouds\.")
            .unwrap();
        assert_eq!(
            schemes.match_package("com.seattleclouds.app42"),
            Some("seattleclouds")
        );
        assert_eq!(
            BuilderSchemes::empty().match_package("net.andromo.dev1.app2"),
            None
        );
    }

    fn outcome(pkg: &str, site: Option<&str>) -> NamingMatch {
        check_naming_convention(pkg, site).outcome
    }

    #[test]
    fn naming_convention() {
        assert_eq!(
            outcome("com.facebook.katana", Some("https://facebook.com")),
            NamingMatch::Match
        );
        assert_eq!(
            outcome("com.facebook.katana", Some("https://www.facebook.com/")),
            NamingMatch::Match
        );
        assert_eq!(
            outcome("nz.co.smalesfarm.app", Some("https://smalesfarm.co.nz")),
            NamingMatch::Match
        );
        assert_eq!(outcome("com.example.app", None), NamingMatch::NoWebsite);
        assert_eq!(
            outcome("com.andromo.dev1.app2", Some("https://yottabyte.example")),
            NamingMatch::NoMatch
        );
        assert_eq!(
            outcome("com.facebook.katana", Some("facebook.de")),
            NamingMatch::PartialMatch
        );
        assert_eq!(
            outcome("com.cube_apps.radio", Some("http://cube-apps.io")),
            NamingMatch::PartialMatch
        );
    }

    #[test]
    fn unparseable_website() {
        let check = check_naming_convention("com.example.app", Some("http://[::1"));
        assert_eq!(check.outcome, NamingMatch::NoMatch);
        assert!(check.unparseable_url);
    }
}
