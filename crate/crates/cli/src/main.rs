fn main() {
    std::process::exit(ase_lab_cli::run(std::env::args_os()));
}
