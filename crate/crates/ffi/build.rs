//! Regenerate the committed C header from the crate's public surface.
//! `write_to_file` leaves the file untouched when nothing changed, so
//! incremental builds stay quiet.

fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("manifest dir");
    let header = std::path::Path::new(&crate_dir).join("include").join("dayflow.h");
    let bindings = cbindgen::generate(&crate_dir).expect("generate C bindings");
    bindings.write_to_file(header);
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
