fn main() {
    std::process::exit(atlas_geodesic::cli::main());
}
