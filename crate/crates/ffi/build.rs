use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let out = crate_dir.join("include").join("auction_ic.h");

    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("AUCTION_IC_H".into()),
        cpp_compat: true,
        documentation: true,
        ..Default::default()
    };

    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(&out);
        }
        // Don't fail the build on header generation (e.g. while the crate
        // itself has a syntax error the compiler will report anyway).
        Err(e) => println!("cargo:warning=cbindgen: {e}"),
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}
