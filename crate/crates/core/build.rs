// Link the system OpenBLAS (which bundles BLAS, CBLAS and LAPACK) instead of
// pulling in a *-src build. Requires libopenblas and gfortran runtime.
fn main() {
    println!("cargo:rustc-link-lib=dylib=openblas");
    println!("cargo:rustc-link-lib=dylib=gfortran");
}
