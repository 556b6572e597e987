use orbitwalk::corpus::{self, analyze};
use orbitwalk::group::certify_orbit_summable;

fn golden_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(format!("{}.analysis.json", name))
}

/// Set `ORBITWALK_BLESS=1` to rewrite the golden files after an intended change.
#[test]
fn analyses_match_goldens() {
    let bless = std::env::var_os("ORBITWALK_BLESS").is_some();
    for b in corpus::all() {
        let m = b.load().unwrap();
        let n = b.load_numerator().unwrap();
        let got = serde_json::to_string_pretty(&analyze(&m, n.as_ref(), 8).to_json()).unwrap() + "\n";
        if bless {
            std::fs::write(golden_path(b.name), &got).unwrap();
        } else {
            assert_eq!(got, b.golden, "analysis of {} drifted", b.name);
        }
    }
}

#[test]
fn reversals_are_certified() {
    for b in &corpus::ORBIT_SUMMABLE {
        let r = b.load().unwrap().reverse();
        let c = certify_orbit_summable(&r, 0, 0, 8).unwrap();
        assert!(c.passed, "reverse of {}: {}", b.name, c);
    }
}
