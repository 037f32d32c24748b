fn main() {
    let crate_root = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_root_or_default(&crate_root);
    match cbindgen::generate_with_config(&crate_root, config) {
        Ok(b) => {
            b.write_to_file(format!("{crate_root}/include/semiwalk.h"));
        }
        // A stale header is better than a failed build when the parser trips.
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
