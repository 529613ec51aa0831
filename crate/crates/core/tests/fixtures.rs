use std::path::PathBuf;

use mnm_core::synth::keyword_fixture_files;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

// Set MNM_REGENERATE_FIXTURES=1 to rewrite the files after changing the generator.
#[test]
fn bundled_fixtures_match_the_generator() {
    let regenerate = std::env::var_os("MNM_REGENERATE_FIXTURES").is_some();
    for (name, text) in keyword_fixture_files() {
        let path = dir().join(name);
        if regenerate {
            std::fs::write(&path, &text).unwrap();
        }
        let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(on_disk == text, "{name} is stale; rerun with MNM_REGENERATE_FIXTURES=1");
    }
}
