//! The shipped profile file must match what the synthetic category families
//! produce. Run with `TDT_BLESS=1` to rewrite it after changing the
//! generators or the clustering.

use tdt_core::profiles::{compound_plan, ProfileRegistry, DEFAULT_PROFILES};
use tdt_core::synth::{category_family, generate};
use tdt_core::typed::view;
use tdt_core::FloatWidth;

const CATEGORIES: [&str; 5] = ["DB", "HPC", "ML", "OBS", "TS"];
const DATASETS_PER_CATEGORY: u64 = 4;
const VALUES: usize = 1 << 16;

fn generated() -> ProfileRegistry {
    let mut reg = ProfileRegistry::default();
    for category in CATEGORIES {
        let family = category_family(category).unwrap();
        for width in FloatWidth::ALL {
            let data: Vec<Vec<u8>> = (0..DATASETS_PER_CATEGORY)
                .map(|seed| generate(family, width, VALUES, 500 + seed))
                .collect();
            let views: Vec<_> = data.iter().map(|d| view(d, width).unwrap()).collect();
            let mut profile = compound_plan(&views, 0.3).unwrap();
            profile.category = category.to_string();
            reg.insert(profile);
        }
    }
    reg
}

#[test]
fn shipped_profiles_match_generator() {
    let fresh = generated();
    if std::env::var_os("TDT_BLESS").is_some() {
        let header = "# Static clustering profiles: category, word width, plan, metric.\n\
                      # Generated by tests/profiles.rs from the synthetic family of each category.\n";
        let text = fresh.to_string();
        let (first, rest) = text.split_once('\n').unwrap();
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/profiles/default.txt");
        std::fs::write(path, format!("{first}\n{header}{rest}")).unwrap();
        return;
    }
    assert_eq!(ProfileRegistry::parse(DEFAULT_PROFILES).unwrap(), fresh, "rerun with TDT_BLESS=1\n{fresh}");
}

#[test]
fn every_category_and_width_is_present() {
    let reg = ProfileRegistry::builtin();
    assert_eq!(reg.len(), CATEGORIES.len() * 3);
    for category in CATEGORIES {
        for width in FloatWidth::ALL {
            let p = reg.get(category, width).unwrap();
            assert_eq!(p.plan.width(), width);
        }
        assert_eq!(reg.get(category, FloatWidth::HALF).unwrap().plan.to_string(), "{1}|{2}");
    }
}
