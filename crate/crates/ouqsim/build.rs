fn main() {
    // Link the system reference LAPACK (and its BLAS) directly; the `lapack`
    // crate only provides the FFI declarations.
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=blas");
}
